//! Truncated Fock-space linear algebra.
//!
//! A state of `L` modes with `d` levels each is a contiguous vector of `d^L`
//! complex amplitudes in mode-major order: the basis index of `|n_1 … n_L⟩` is
//! `Σ_k n_k d^(L-k)`, so mode 0 is the most significant digit. Operators are
//! applied by strided contraction and never materialized on the full space.

use std::io::{Read, Write};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tag written into snapshots for the mode-major ordering.
pub const ORDERING_MODE_MAJOR: u8 = 0;

/// Largest reduced density matrix (in complex entries) `reduce` will allocate.
pub const MAX_REDUCED_ENTRIES: usize = 1 << 26;

const SNAPSHOT_MAGIC: &[u8; 8] = b"KPOSTATE";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
    levels: usize,
    dim: usize,
}

impl FockSpace {
    pub fn new(modes: usize, levels: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParams("a Fock space needs at least one mode".into()));
        }
        if levels < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 levels per mode, got {levels}")));
        }
        let dim = u32::try_from(modes)
            .ok()
            .and_then(|m| levels.checked_pow(m))
            .ok_or_else(|| Error::InvalidParams(format!("{levels}^{modes} does not fit in memory")))?;
        Ok(FockSpace { modes, levels, dim })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index distance between neighbouring levels of mode `k`.
    pub fn stride(&self, k: usize) -> usize {
        self.levels.pow((self.modes - 1 - k) as u32)
    }

    pub fn digit(&self, index: usize, k: usize) -> usize {
        index / self.stride(k) % self.levels
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.modes).map(|k| self.digit(index, k)).collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.modes);
        digits.iter().fold(0, |acc, &n| {
            assert!(n < self.levels, "level {n} out of range");
            acc * self.levels + n
        })
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.modes {
            return Err(Error::ModeOutOfRange { mode: k, modes: self.modes });
        }
        Ok(())
    }

    /// Bytes needed for one state vector of scalar `T`.
    pub fn state_bytes<T>(&self) -> u128 {
        self.dim as u128 * std::mem::size_of::<Complex<T>>() as u128
    }
}

/// Complex amplitudes over a [`FockSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    space: FockSpace,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zeros(space: FockSpace) -> Self {
        StateVector { space, amps: vec![Complex::zero(); space.dim()] }
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis(space, &vec![0; space.modes()])
    }

    pub fn basis(space: FockSpace, digits: &[usize]) -> Self {
        let mut psi = Self::zeros(space);
        psi.amps[space.index_of(digits)] = Complex::one();
        psi
    }

    pub fn from_amplitudes(space: FockSpace, amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amps.len() });
        }
        Ok(StateVector { space, amps })
    }

    /// Tensor product of single-mode states (each of length `levels`).
    pub fn product(space: FockSpace, factors: &[Vec<Complex<T>>]) -> Result<Self> {
        if factors.len() != space.modes() {
            return Err(Error::DimensionMismatch { expected: space.modes(), got: factors.len() });
        }
        let mut amps = vec![Complex::one()];
        for f in factors {
            if f.len() != space.levels() {
                return Err(Error::DimensionMismatch { expected: space.levels(), got: f.len() });
            }
            amps = amps.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        Ok(StateVector { space, amps })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let inv = T::one() / self.norm();
        for a in &mut self.amps {
            *a = a.scale(inv);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.space, other.space);
        dot_conj(&other.amps, &self.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    pub fn cast<U: Real>(&self) -> StateVector<U> {
        StateVector {
            space: self.space,
            amps: self
                .amps
                .iter()
                .map(|a| Complex::new(U::of(a.re.to_f64_lossy()), U::of(a.im.to_f64_lossy())))
                .collect(),
        }
    }
}

/// `Σ a_i conj(b_i)`.
pub(crate) fn dot_conj<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let mut acc = [Complex::<T>::zero(); 4];
    let chunks = a.len() / 4 * 4;
    for (ca, cb) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        for lane in 0..4 {
            acc[lane] += ca[lane] * cb[lane].conj();
        }
    }
    let tail = a[chunks..]
        .iter()
        .zip(&b[chunks..])
        .fold(Complex::zero(), |s, (x, y)| s + x * y.conj());
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A dense `d × d` operator on one mode, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeOp<T> {
    levels: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> SingleModeOp<T> {
    pub fn from_fn(levels: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let data = (0..levels * levels).map(|ij| f(ij / levels, ij % levels)).collect();
        SingleModeOp { levels, data }
    }

    pub fn from_real(levels: usize, f: impl Fn(usize, usize) -> T) -> Self {
        Self::from_fn(levels, |i, j| Complex::new(f(i, j), T::zero()))
    }

    pub fn identity(levels: usize) -> Self {
        Self::from_real(levels, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// `a|n⟩ = √n |n-1⟩`.
    pub fn annihilation(levels: usize) -> Self {
        Self::from_real(levels, |i, j| if j == i + 1 { T::of(j as f64).sqrt() } else { T::zero() })
    }

    pub fn creation(levels: usize) -> Self {
        Self::annihilation(levels).dagger()
    }

    pub fn number(levels: usize) -> Self {
        Self::from_real(levels, |i, j| if i == j { T::of(i as f64) } else { T::zero() })
    }

    /// Truncated quadrature `x = (a + a†)/2`.
    pub fn quadrature(levels: usize) -> Self {
        Self::from_real(levels, |i, j| {
            if i.abs_diff(j) == 1 {
                T::of(i.max(j) as f64).sqrt() / T::of(2.0)
            } else {
                T::zero()
            }
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.levels + j]
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.levels, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.levels, rhs.levels);
        Self::from_fn(self.levels, |i, j| {
            (0..self.levels).fold(Complex::zero(), |acc, m| acc + self.get(i, m) * rhs.get(m, j))
        })
    }
}

/// Normalized coherent state `|α⟩` truncated to `levels` levels.
pub fn coherent_amplitudes<T: Real>(levels: usize, alpha: Complex<T>) -> Vec<Complex<T>> {
    let mut amps = Vec::with_capacity(levels);
    let mut term = Complex::one();
    for n in 0..levels {
        if n > 0 {
            term = term * alpha / T::of(n as f64).sqrt();
        }
        amps.push(term);
    }
    let norm = amps.iter().fold(T::zero(), |s, a| s + a.norm_sqr()).sqrt();
    amps.iter().map(|a| a / norm).collect()
}

/// `(I ⊗ … ⊗ op ⊗ … ⊗ I) ψ` with `op` acting on mode `k`.
pub fn apply_single_mode<T: Real>(op: &SingleModeOp<T>, k: usize, psi: &StateVector<T>) -> Result<StateVector<T>> {
    let space = psi.space;
    space.check_mode(k)?;
    if op.levels != space.levels() {
        return Err(Error::DimensionMismatch { expected: space.levels(), got: op.levels });
    }
    let d = space.levels();
    let stride = space.stride(k);
    let block = stride * d;
    let mut out = vec![Complex::zero(); space.dim()];
    for (src, dst) in psi.amps.chunks_exact(block).zip(out.chunks_exact_mut(block)) {
        for i in 0..d {
            let row = &mut dst[i * stride..(i + 1) * stride];
            for j in 0..d {
                let c = op.get(i, j);
                if c.is_zero() {
                    continue;
                }
                for (o, s) in row.iter_mut().zip(&src[j * stride..(j + 1) * stride]) {
                    *o += c * s;
                }
            }
        }
    }
    Ok(StateVector { space, amps: out })
}

/// Tensor product of single-mode operators on distinct modes, identity elsewhere.
pub fn apply_modes<T: Real>(ops: &[(usize, &SingleModeOp<T>)], psi: &StateVector<T>) -> Result<StateVector<T>> {
    for (n, &(k, _)) in ops.iter().enumerate() {
        psi.space.check_mode(k)?;
        if ops[..n].iter().any(|&(m, _)| m == k) {
            return Err(Error::RepeatedMode(k));
        }
    }
    let mut out = psi.clone();
    for &(k, op) in ops {
        out = apply_single_mode(op, k, &out)?;
    }
    Ok(out)
}

pub fn apply_mode_pair<T: Real>(ops: [(usize, &SingleModeOp<T>); 2], psi: &StateVector<T>) -> Result<StateVector<T>> {
    apply_modes(&ops, psi)
}

pub fn apply_mode_quad<T: Real>(ops: [(usize, &SingleModeOp<T>); 4], psi: &StateVector<T>) -> Result<StateVector<T>> {
    apply_modes(&ops, psi)
}

/// Photon-number distribution of mode `k` (unnormalized if `ψ` is).
pub fn level_populations<T: Real>(psi: &StateVector<T>, k: usize) -> Result<Vec<T>> {
    let space = psi.space;
    space.check_mode(k)?;
    let d = space.levels();
    let stride = space.stride(k);
    let mut pops = vec![T::zero(); d];
    for chunk in psi.amps.chunks_exact(stride * d) {
        for (n, level) in chunk.chunks_exact(stride).enumerate() {
            pops[n] += level.iter().fold(T::zero(), |s, a| s + a.norm_sqr());
        }
    }
    Ok(pops)
}

/// `⟨a†_k a_k⟩`.
pub fn mean_photon<T: Real>(psi: &StateVector<T>, k: usize) -> Result<T> {
    Ok(level_populations(psi, k)?
        .into_iter()
        .enumerate()
        .fold(T::zero(), |s, (n, p)| s + T::of(n as f64) * p))
}

/// Population of the highest retained level of mode `k`: a truncation diagnostic.
pub fn tail_population<T: Real>(psi: &StateVector<T>, k: usize) -> Result<T> {
    Ok(*level_populations(psi, k)?.last().expect("at least two levels"))
}

/// Partial trace of `|ψ⟩⟨ψ|` onto the modes in `keep`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensity<T> {
    keep: Vec<usize>,
    levels: usize,
    dim: usize,
    matrix: Vec<Complex<T>>,
}

pub fn reduce<T: Real>(psi: &StateVector<T>, keep: &[usize]) -> Result<ReducedDensity<T>> {
    let space = psi.space;
    if keep.is_empty() {
        return Err(Error::InvalidParams("reduce needs at least one kept mode".into()));
    }
    for (n, &k) in keep.iter().enumerate() {
        space.check_mode(k)?;
        if keep[..n].contains(&k) {
            return Err(Error::RepeatedMode(k));
        }
    }
    let d = space.levels();
    let rows = d.checked_pow(keep.len() as u32).unwrap_or(usize::MAX);
    let entries = rows.saturating_mul(rows);
    if entries > MAX_REDUCED_ENTRIES {
        return Err(Error::MemoryBudget {
            required: entries as u128 * std::mem::size_of::<Complex<T>>() as u128,
            budget: MAX_REDUCED_ENTRIES as u128 * std::mem::size_of::<Complex<T>>() as u128,
        });
    }
    let cols = space.dim() / rows;

    // Gather ψ into a rows × cols matrix: kept digits (in `keep` order) index rows.
    let traced: Vec<usize> = (0..space.modes()).filter(|k| !keep.contains(k)).collect();
    let gathered: Vec<Complex<T>>;
    let matrix_view: &[Complex<T>] = if keep.iter().copied().eq(0..keep.len()) {
        &psi.amps
    } else {
        let mut g = vec![Complex::zero(); space.dim()];
        for (index, a) in psi.amps.iter().enumerate() {
            let r = keep.iter().fold(0, |acc, &k| acc * d + space.digit(index, k));
            let c = traced.iter().fold(0, |acc, &k| acc * d + space.digit(index, k));
            g[r * cols + c] = *a;
        }
        gathered = g;
        &gathered
    };

    let mut matrix = vec![Complex::zero(); entries];
    for i in 0..rows {
        let ri = &matrix_view[i * cols..(i + 1) * cols];
        for j in 0..=i {
            let v = dot_conj(ri, &matrix_view[j * cols..(j + 1) * cols]);
            matrix[i * rows + j] = v;
            matrix[j * rows + i] = v.conj();
        }
    }
    Ok(ReducedDensity { keep: keep.to_vec(), levels: d, dim: rows, matrix })
}

impl<T: Real> ReducedDensity<T> {
    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.matrix[i * self.dim + j]
    }

    pub fn matrix(&self) -> &[Complex<T>] {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |s, i| s + self.get(i, i))
    }

    /// `max |ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `Tr[ρ ⊗_k M_k(s_k)]` for every sign pattern over the kept modes.
    /// Pattern bit `k` set means kept mode `keep[k]` reads `-1`.
    pub fn sign_pattern_probabilities(&self, proj: &SignProjectors<T>) -> Vec<T> {
        assert_eq!(proj.levels, self.levels);
        let m = self.keep.len();
        let mut out = vec![T::zero(); 1 << m];
        // Contract one mode at a time so every prefix of signs is computed once.
        fn recurse<T: Real>(
            rho: &[Complex<T>],
            modes_left: usize,
            depth: usize,
            bits: usize,
            proj: &SignProjectors<T>,
            out: &mut [T],
        ) {
            for (bit, m) in [(0, &proj.plus), (1, &proj.minus)] {
                let sigma = contract_leading(rho, modes_left, proj.levels, m);
                let bits = bits | bit << depth;
                if modes_left == 1 {
                    out[bits] = sigma[0].re;
                } else {
                    recurse(&sigma, modes_left - 1, depth + 1, bits, proj, out);
                }
            }
        }
        recurse(&self.matrix, m, 0, 0, proj, &mut out);
        out
    }
}

/// `σ[i', j'] = Σ_{a,b} M[b,a] ρ[(a,i'), (b,j')]` for the most significant kept mode.
fn contract_leading<T: Real>(rho: &[Complex<T>], modes: usize, d: usize, m: &[T]) -> Vec<Complex<T>> {
    let sub = d.pow(modes as u32 - 1);
    let full = sub * d;
    let mut sigma = vec![Complex::zero(); sub * sub];
    for a in 0..d {
        for b in 0..d {
            let w = m[b * d + a];
            if w.is_zero() {
                continue;
            }
            for i in 0..sub {
                let src = &rho[(a * sub + i) * full + b * sub..][..sub];
                for (o, s) in sigma[i * sub..(i + 1) * sub].iter_mut().zip(src) {
                    *o += s.scale(w);
                }
            }
        }
    }
    sigma
}

/// Single-mode projectors onto the half-lines `x > 0` and `x < 0` of the
/// truncated quadrature `x = (a + a†)/2`, built from its spectral decomposition.
/// A zero eigenvalue (odd `d`) is shared equally between the two, which keeps
/// `M_+ + M_- = I` and the `x → -x` symmetry exact.
#[derive(Clone, Debug, PartialEq)]
pub struct SignProjectors<T> {
    levels: usize,
    plus: Vec<T>,
    minus: Vec<T>,
}

pub fn sign_projectors<T: Real>(levels: usize) -> SignProjectors<T> {
    assert!(levels >= 2, "need at least two levels");
    let x = nalgebra::DMatrix::<f64>::from_fn(levels, levels, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64).sqrt() / 2.0
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(x);
    let scale = eig.eigenvalues.amax();
    let mut sign_x = nalgebra::DMatrix::<f64>::zeros(levels, levels);
    for (n, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= 1e-12 * scale {
            continue;
        }
        let v = eig.eigenvectors.column(n);
        sign_x += lambda.signum() * v * v.transpose();
    }
    // sign(x) anticommutes with parity (-1)^n, so only entries with i + j odd survive.
    let mut plus = vec![T::zero(); levels * levels];
    let mut minus = vec![T::zero(); levels * levels];
    for i in 0..levels {
        for j in 0..levels {
            let (p, m) = if i == j {
                (T::of(0.5), T::of(0.5))
            } else if (i + j) % 2 == 1 {
                let q = T::of(0.25 * (sign_x[(i, j)] + sign_x[(j, i)]));
                (q, -q)
            } else {
                (T::zero(), T::zero())
            };
            plus[i * levels + j] = p;
            minus[i * levels + j] = m;
        }
    }
    SignProjectors { levels, plus, minus }
}

impl<T: Real> SignProjectors<T> {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn plus(&self) -> &[T] {
        &self.plus
    }

    pub fn minus(&self) -> &[T] {
        &self.minus
    }

    /// Projector for a spin value (`+1` or `-1`).
    pub fn for_sign(&self, s: i8) -> &[T] {
        if s > 0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    pub fn as_op(&self, s: i8) -> SingleModeOp<T> {
        let m = self.for_sign(s);
        SingleModeOp::from_real(self.levels, |i, j| m[i * self.levels + j])
    }
}

/// Binary snapshot: magic `KPOSTATE`, `u32` modes, `u32` levels, `u8` ordering
/// tag, `f64` time, then `d^L` pairs of `f64` (re, im). All little-endian.
pub fn write_snapshot<T: Real, W: Write>(mut w: W, psi: &StateVector<T>, time: f64) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(psi.space.modes() as u32).to_le_bytes())?;
    w.write_all(&(psi.space.levels() as u32).to_le_bytes())?;
    w.write_all(&[ORDERING_MODE_MAJOR])?;
    w.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(psi.amps.len() * 16);
    for a in &psi.amps {
        buf.extend_from_slice(&a.re.to_f64_lossy().to_le_bytes());
        buf.extend_from_slice(&a.im.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(StateVector<f64>, f64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let modes = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let levels = u32::from_le_bytes(u32buf) as usize;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    if tag[0] != ORDERING_MODE_MAJOR {
        return Err(Error::Snapshot(format!("unknown ordering tag {}", tag[0])));
    }
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let time = f64::from_le_bytes(f64buf);
    let space = FockSpace::new(modes, levels).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut raw = vec![0u8; space.dim() * 16];
    r.read_exact(&mut raw)?;
    let amps = raw
        .chunks_exact(16)
        .map(|c| {
            Complex::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((StateVector { space, amps }, time))
}
