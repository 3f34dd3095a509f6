//! Time-dependent Hamiltonian of a KPO network in the LHZ encoding.
//!
//! With `ħ = 1` and frequencies in the same unit as the Kerr coefficient `K`:
//!
//! ```text
//! H = Σ_k [ K/2 a†²a² − p/2 (a†² + a²) + Δ_k a†a − ξ A J_k (a + a†) ]
//!     − ξ C Σ_plaquettes (T + T†)
//! ```
//!
//! Interior plaquettes contribute `T = a†_k a†_l a_m a_n`. On the bottom row the
//! fixed ancilla's ladder operator is replaced by the scalar `β`, leaving
//! `T = β a†_k a†_l a_m`. The two lowest-indexed modes carry the creators.

use serde::{Deserialize, Serialize};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, StateVector};
use crate::lhz::LhzInstance;
use crate::scalar::{Coupling, Real};

/// Which pump value enters the detuning correction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMode {
    /// `Δ_k(t) = Δ + α(t)² ξ C z_k`, tracking the ramp.
    #[default]
    Instantaneous,
    /// `Δ_k = Δ + α(T)² ξ C z_k` for the whole run.
    FinalPump,
}

/// Hamiltonian, schedule and integrator parameters, in units of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub kerr: f64,
    pub pump_final: f64,
    pub detuning: f64,
    pub xi: f64,
    pub c: f64,
    pub t_final: f64,
    pub correction: bool,
    pub correction_mode: CorrectionMode,
    pub levels: usize,
    pub dt: f64,
    /// Shrink `dt` below the RK4 stability limit instead of failing.
    pub auto_dt: bool,
    /// Reject parameters with `ξC/K > 1`.
    pub strict_vacuum_stability: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            kerr: 1.0,
            pump_final: 4.0,
            detuning: 1.0,
            xi: 0.3,
            c: 0.3,
            t_final: 500.0,
            correction: false,
            correction_mode: CorrectionMode::Instantaneous,
            levels: 13,
            dt: 0.01,
            auto_dt: false,
            strict_vacuum_stability: false,
        }
    }
}

impl SimParams {
    pub fn with_correction(mut self, on: bool) -> Self {
        self.correction = on;
        self
    }

    pub fn with_coupling(mut self, c: f64, xi: f64) -> Self {
        self.c = c;
        self.xi = xi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all = [self.kerr, self.pump_final, self.detuning, self.xi, self.c, self.t_final, self.dt];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if self.kerr <= 0.0 {
            return bad(format!("Kerr coefficient must be positive, got {}", self.kerr));
        }
        if self.detuning <= 0.0 {
            return bad(format!("initial detuning must be positive, got {}", self.detuning));
        }
        if self.pump_final < 0.0 {
            return bad(format!("final pump must be non-negative, got {}", self.pump_final));
        }
        if self.t_final <= 0.0 || self.dt <= 0.0 {
            return bad(format!("need T > 0 and dt > 0, got T = {} and dt = {}", self.t_final, self.dt));
        }
        if self.dt > self.t_final {
            return bad(format!("dt = {} exceeds T = {}", self.dt, self.t_final));
        }
        if self.levels < 2 {
            return bad(format!("need at least 2 Fock levels, got {}", self.levels));
        }
        if self.strict_vacuum_stability && self.xi * self.c / self.kerr > 1.0 {
            return bad(format!("ξC/K = {} exceeds 1", self.xi * self.c / self.kerr));
        }
        Ok(())
    }

    /// Validation plus `p_f > Δ`, required whenever a bifurcation is expected.
    pub fn validate_bifurcating(&self) -> Result<()> {
        self.validate()?;
        if self.pump_final <= self.detuning {
            return Err(Error::InvalidParams(format!(
                "final pump {} must exceed the detuning {} for the oscillators to bifurcate",
                self.pump_final, self.detuning
            )));
        }
        Ok(())
    }

    /// Number of RK4 steps for step size `dt`.
    pub fn steps_for(&self, dt: f64) -> usize {
        let exact = self.t_final / dt;
        let rounded = exact.round();
        if (exact - rounded).abs() < 1e-9 * exact.max(1.0) {
            rounded.max(1.0) as usize
        } else {
            exact.ceil() as usize
        }
    }

    pub fn pump(&self, t: f64) -> f64 {
        self.pump_final * t / self.t_final
    }

    /// `α(t) = sqrt(max(0, (p(t) − Δ)/K))`.
    pub fn alpha(&self, t: f64) -> f64 {
        ((self.pump(t) - self.detuning) / self.kerr).max(0.0).sqrt()
    }
}

/// Every scheduled coefficient at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSample {
    pub time: f64,
    pub pump: f64,
    pub alpha: f64,
    pub drive: f64,
    pub beta: f64,
    pub detunings: Vec<f64>,
}

/// Schedule at time `t` for modes with plaquette counts `z`.
pub fn schedule(params: &SimParams, z: &[usize], t: f64) -> Result<ScheduleSample> {
    let tol = 1e-12 * params.t_final;
    if !(t >= -tol && t <= params.t_final + tol) {
        return Err(Error::TimeOutOfRange { time: t, t_final: params.t_final });
    }
    let t = t.clamp(0.0, params.t_final);
    let alpha = params.alpha(t);
    let shift_scale = match (params.correction, params.correction_mode) {
        (false, _) => 0.0,
        (true, CorrectionMode::Instantaneous) => alpha * alpha,
        (true, CorrectionMode::FinalPump) => params.alpha(params.t_final).powi(2),
    } * params.xi
        * params.c;
    Ok(ScheduleSample {
        time: t,
        pump: params.pump(t),
        alpha,
        drive: alpha.powi(3),
        beta: alpha,
        detunings: z.iter().map(|&zk| params.detuning + shift_scale * zk as f64).collect(),
    })
}

/// Time-independent structure of one plaquette term. `T` shifts every basis
/// index by the same `shift`, and the ladder factor of the image `j` is a
/// product of per-mode tables over its digits, zero where `T` has no preimage.
#[derive(Clone, Debug)]
struct Stencil<T> {
    /// Involved modes with their factor tables, in mode order.
    factors: Vec<(usize, Vec<T>)>,
    shift: usize,
    /// Stride of the last involved mode: the factor is constant on runs this long.
    run: usize,
}

impl<T: Real> Stencil<T> {
    fn new(space: FockSpace, creators: &[usize], annihilators: &[usize]) -> Self {
        let d = space.levels();
        let mut factors: Vec<(usize, Vec<T>)> = creators
            .iter()
            .map(|&k| (k, (0..d).map(|n| T::of(n as f64).sqrt()).collect()))
            .chain(annihilators.iter().map(|&k| {
                (k, (0..d).map(|n| if n + 1 < d { T::of((n + 1) as f64).sqrt() } else { T::zero() }).collect())
            }))
            .collect();
        factors.sort_by_key(|f| f.0);
        let up: usize = creators.iter().map(|&k| space.stride(k)).sum();
        let down: usize = annihilators.iter().map(|&k| space.stride(k)).sum();
        assert!(up > down, "creators sit on the lowest-indexed modes");
        let run = space.stride(factors.last().expect("non-empty term").0);
        Stencil { factors, shift: up - down, run }
    }

    /// `out += w (T + T†) ψ`.
    fn apply(&self, space: FockSpace, weight: T, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        let d = space.levels();
        let last = self.factors.last().expect("non-empty term").0;
        let prefixes = space.dim() / self.run;
        // Odometer over the digits of modes 0..=last.
        let mut digits = vec![0usize; last + 1];
        for prefix in 0..prefixes {
            let f = self.factors.iter().fold(weight, |acc, (k, table)| acc * table[digits[*k]]);
            if !f.is_zero() {
                let j = prefix * self.run;
                let i = j - self.shift;
                for r in 0..self.run {
                    let (dst, src) = (j + r, i + r);
                    let (a, b) = (psi[src], psi[dst]);
                    out[dst] += a.scale(f);
                    out[src] += b.scale(f);
                }
            }
            for digit in digits.iter_mut().rev() {
                *digit += 1;
                if *digit < d {
                    break;
                }
                *digit = 0;
            }
        }
    }

    fn max_coefficient(&self) -> T {
        self.factors
            .iter()
            .fold(T::one(), |acc, (_, table)| acc * table.iter().fold(T::zero(), |m, &x| m.max(x)))
    }
}

/// A plaquette term `weight · (T + T†)` as seen by the Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTerm {
    pub creators: Vec<usize>,
    pub annihilators: Vec<usize>,
    /// Number of ancilla legs replaced by `β`.
    pub ancilla_legs: usize,
    pub weight: f64,
}

/// Single-mode coefficients: `K/2 a†²a² + Δ_k a†a − p/2 (a†² + a²) + drive (a + a†)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTerm {
    pub kerr: f64,
    pub detuning: f64,
    pub pump: f64,
    pub drive: f64,
}

/// Geometry and constant couplings of the network; build once per run.
#[derive(Clone, Debug)]
pub struct Hamiltonian<T> {
    params: SimParams,
    space: FockSpace,
    z: Vec<usize>,
    couplings: Vec<f64>,
    terms: Vec<(Vec<usize>, Vec<usize>, usize)>,
    stencils: Vec<Stencil<T>>,
}

impl<T: Real> Hamiltonian<T> {
    pub fn new<S: Coupling>(params: &SimParams, lhz: &LhzInstance<S>) -> Result<Self> {
        params.validate()?;
        let space = FockSpace::new(lhz.modes(), params.levels)?;
        let couplings = lhz
            .couplings()
            .iter()
            .map(|j| j.to_f64().ok_or_else(|| Error::InvalidInstance("coupling not representable as f64".into())))
            .collect::<Result<Vec<_>>>()?;
        let terms: Vec<_> = lhz
            .plaquettes()
            .iter()
            .map(|p| (p.creators().to_vec(), p.annihilators().to_vec(), p.ancilla_legs))
            .collect();
        let stencils = terms.iter().map(|(c, a, _)| Stencil::new(space, c, a)).collect();
        Ok(Hamiltonian { params: params.clone(), space, z: lhz.z().to_vec(), couplings, terms, stencils })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn schedule(&self, t: f64) -> Result<ScheduleSample> {
        schedule(&self.params, &self.z, t)
    }

    /// Coefficients of `H(t)`.
    pub fn at(&self, t: f64) -> Result<HamiltonianTerms<'_, T>> {
        Ok(self.terms_for(&self.schedule(t)?))
    }

    pub fn terms_for(&self, s: &ScheduleSample) -> HamiltonianTerms<'_, T> {
        let p = &self.params;
        let d = self.space.levels();
        let modes: Vec<ModeTerm> = (0..self.space.modes())
            .map(|k| ModeTerm {
                kerr: p.kerr,
                detuning: s.detunings[k],
                pump: s.pump,
                drive: -p.xi * s.drive * self.couplings[k],
            })
            .collect();
        let couplings: Vec<CouplingTerm> = self
            .terms
            .iter()
            .map(|(c, a, legs)| CouplingTerm {
                creators: c.clone(),
                annihilators: a.clone(),
                ancilla_legs: *legs,
                weight: -p.xi * p.c * s.beta.powi(*legs as i32),
            })
            .collect();
        let tables = modes.iter().map(|m| ModeTables::new(m, d)).collect();
        HamiltonianTerms { ham: self, sample: s.clone(), modes, couplings, tables }
    }
}

#[derive(Clone, Debug)]
struct ModeTables<T> {
    diag: Vec<T>,
    off1: Vec<T>,
    off2: Vec<T>,
}

impl<T: Real> ModeTables<T> {
    fn new(m: &ModeTerm, d: usize) -> Self {
        let diag = (0..d)
            .map(|n| {
                let n = n as f64;
                T::of(0.5 * m.kerr * n * (n - 1.0) + m.detuning * n)
            })
            .collect();
        let off1 = (0..d - 1).map(|n| T::of(m.drive * ((n + 1) as f64).sqrt())).collect();
        let off2 = (0..d.saturating_sub(2))
            .map(|n| T::of(-0.5 * m.pump * (((n + 1) * (n + 2)) as f64).sqrt()))
            .collect();
        ModeTables { diag, off1, off2 }
    }

    /// Dense `d × d` single-mode block, row-major, in f64.
    fn dense(&self) -> Vec<f64> {
        let d = self.diag.len();
        let mut h = vec![0.0; d * d];
        for n in 0..d {
            h[n * d + n] = self.diag[n].to_f64_lossy();
        }
        for (n, v) in self.off1.iter().enumerate() {
            h[n * d + n + 1] = v.to_f64_lossy();
            h[(n + 1) * d + n] = v.to_f64_lossy();
        }
        for (n, v) in self.off2.iter().enumerate() {
            h[n * d + n + 2] = v.to_f64_lossy();
            h[(n + 2) * d + n] = v.to_f64_lossy();
        }
        h
    }
}

/// `H(t)` with all coefficients fixed; applies to states without
/// materializing the matrix.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms<'a, T> {
    ham: &'a Hamiltonian<T>,
    sample: ScheduleSample,
    modes: Vec<ModeTerm>,
    couplings: Vec<CouplingTerm>,
    tables: Vec<ModeTables<T>>,
}

/// Coefficients of `H(t)` for `lhz` under `params`.
pub fn build_terms<'a, T: Real>(ham: &'a Hamiltonian<T>, t: f64) -> Result<HamiltonianTerms<'a, T>> {
    ham.at(t)
}

impl<T: Real> HamiltonianTerms<'_, T> {
    pub fn sample(&self) -> &ScheduleSample {
        &self.sample
    }

    pub fn mode_terms(&self) -> &[ModeTerm] {
        &self.modes
    }

    pub fn coupling_terms(&self) -> &[CouplingTerm] {
        &self.couplings
    }

    pub fn space(&self) -> FockSpace {
        self.ham.space
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        if psi.space() != self.ham.space {
            return Err(Error::DimensionMismatch { expected: self.ham.space.dim(), got: psi.space().dim() });
        }
        let mut out = vec![Complex::zero(); psi.space().dim()];
        self.apply_into(psi.amplitudes(), &mut out, T::zero())?;
        StateVector::from_amplitudes(psi.space(), out)
    }

    /// `out = (H − shift) ψ`; `out` is overwritten.
    pub fn apply_into(&self, psi: &[Complex<T>], out: &mut [Complex<T>], shift: T) -> Result<()> {
        let space = self.ham.space;
        for len in [psi.len(), out.len()] {
            if len != space.dim() {
                return Err(Error::DimensionMismatch { expected: space.dim(), got: len });
            }
        }
        let d = space.levels();
        let modes = space.modes();

        // Diagonal plus the last mode's band, chunk by chunk; this initializes `out`.
        let last = &self.tables[modes - 1];
        let mut digits = vec![0usize; modes - 1];
        let mut prefix = self.tables[..modes - 1].iter().fold(-shift, |s, t| s + t.diag[0]);
        for (src, dst) in psi.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            for n in 0..d {
                let mut acc = src[n].scale(prefix + last.diag[n]);
                if n >= 1 {
                    acc += src[n - 1].scale(last.off1[n - 1]);
                }
                if n + 1 < d {
                    acc += src[n + 1].scale(last.off1[n]);
                }
                if n >= 2 {
                    acc += src[n - 2].scale(last.off2[n - 2]);
                }
                if n + 2 < d {
                    acc += src[n + 2].scale(last.off2[n]);
                }
                dst[n] = acc;
            }
            // Advance the odometer over the leading modes.
            for k in (0..modes - 1).rev() {
                let table = &self.tables[k].diag;
                prefix -= table[digits[k]];
                digits[k] += 1;
                if digits[k] < d {
                    prefix += table[digits[k]];
                    break;
                }
                digits[k] = 0;
                prefix += table[0];
            }
        }

        // Bands of the leading modes: each row of length `stride` gathers its
        // four neighbours in one pass.
        for k in 0..modes - 1 {
            let stride = space.stride(k);
            let t = &self.tables[k];
            for (src, dst) in psi.chunks_exact(stride * d).zip(out.chunks_exact_mut(stride * d)) {
                for (n, row) in dst.chunks_exact_mut(stride).enumerate() {
                    let neighbours = [
                        (n >= 1).then(|| (n - 1, t.off1[n - 1])),
                        (n + 1 < d).then(|| (n + 1, t.off1[n])),
                        (n >= 2).then(|| (n - 2, t.off2[n - 2])),
                        (n + 2 < d).then(|| (n + 2, t.off2[n])),
                    ];
                    for (m, c) in neighbours.into_iter().flatten() {
                        if c.is_zero() {
                            continue;
                        }
                        for (o, x) in row.iter_mut().zip(&src[m * stride..(m + 1) * stride]) {
                            *o += x.scale(c);
                        }
                    }
                }
            }
        }

        for (term, stencil) in self.couplings.iter().zip(&self.ham.stencils) {
            if term.weight != 0.0 {
                stencil.apply(space, T::of(term.weight), psi, out);
            }
        }
        Ok(())
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector<T>) -> Result<Complex<T>> {
        Ok(psi.inner(&self.apply(psi)?))
    }

    /// Extreme eigenvalues of `Σ_k h_k` (the single-mode part).
    pub fn local_spectrum_bounds(&self) -> (f64, f64) {
        let d = self.ham.space.levels();
        self.tables.iter().fold((0.0, 0.0), |(lo, hi), t| {
            let m = nalgebra::DMatrix::from_row_slice(d, d, &t.dense());
            let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
            (lo + eig.min(), hi + eig.max())
        })
    }

    /// Upper bound on the norm of the plaquette part of `H`.
    pub fn coupling_norm_bound(&self) -> f64 {
        // Each T maps basis states injectively, so ‖T‖ is its largest ladder factor.
        self.couplings
            .iter()
            .zip(&self.ham.stencils)
            .map(|(term, s)| 2.0 * term.weight.abs() * s.max_coefficient().to_f64_lossy())
            .sum()
    }

    /// Upper bound on the spectral radius of `H − shift`.
    pub fn spectral_radius_bound(&self, shift: f64) -> f64 {
        let (lo, hi) = self.local_spectrum_bounds();
        (hi - shift).abs().max((shift - lo).abs()) + self.coupling_norm_bound()
    }

    /// Dense matrix of `H` (row-major) for small spaces; columns are `H|e_j⟩`.
    pub fn dense_matrix(&self) -> Result<Vec<Complex<T>>> {
        let dim = self.ham.space.dim();
        const LIMIT: usize = 1 << 12;
        if dim > LIMIT {
            return Err(Error::TooLarge { what: "dense Hamiltonian dimension", size: dim, limit: LIMIT });
        }
        let mut m = vec![Complex::zero(); dim * dim];
        let mut e = vec![Complex::zero(); dim];
        let mut col = vec![Complex::zero(); dim];
        for j in 0..dim {
            e[j] = Complex::new(T::one(), T::zero());
            self.apply_into(&e, &mut col, T::zero())?;
            e[j] = Complex::zero();
            for i in 0..dim {
                m[i * dim + j] = col[i];
            }
        }
        Ok(m)
    }
}

/// Ground state of `H(t)` by dense diagonalization (small spaces only).
pub fn ground_state(terms: &HamiltonianTerms<'_, f64>) -> Result<(f64, StateVector<f64>)> {
    let dim = terms.space().dim();
    let dense = terms.dense_matrix()?;
    let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| dense[i * dim + j].re);
    let eig = nalgebra::SymmetricEigen::new(m);
    let (idx, &e0) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let amps = eig.eigenvectors.column(idx).iter().map(|&x| Complex::new(x, 0.0)).collect();
    Ok((e0, StateVector::from_amplitudes(terms.space(), amps)?))
}
