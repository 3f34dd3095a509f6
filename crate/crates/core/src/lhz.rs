//! Classical side of the LHZ parity encoding: layout, energies, and the
//! exhaustive oracles used to score the quantum machine.
//!
//! Ising spins are indexed `0..N`. The `L = N(N-1)/2` LHZ spins are laid out
//! row by row on a triangle: row `r` (1-based) holds the pairs `(i, i+r)`, so the
//! first `N-1` LHZ spins are the nearest-neighbour products `s_i s_{i+1}`. Every
//! plaquette joins two neighbouring rows; the plaquettes between rows 1 and 2
//! are closed by a fixed ancilla spin (`+1`) instead of a fourth LHZ spin.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Coupling;

/// Largest Ising problem the brute-force oracle accepts.
pub const MAX_ISING_SPINS: usize = 24;

/// Largest LHZ register enumerated exhaustively (`2^L` configurations).
pub const MAX_LHZ_SPINS: usize = 24;

/// A configuration of `±1` spins.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Spins(Vec<i8>);

impl Spins {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidInstance(format!("spin value {bad} is not ±1")));
        }
        Ok(Spins(values))
    }

    pub fn all_up(len: usize) -> Self {
        Spins(vec![1; len])
    }

    /// Bit `k` set means spin `k` is `-1`.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        Spins((0..len).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> i8 {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Spins(self.0.iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for Spins {
    type Error = Error;

    fn try_from(values: Vec<i8>) -> Result<Self> {
        Spins::new(values)
    }
}

impl From<Spins> for Vec<i8> {
    fn from(s: Spins) -> Self {
        s.0
    }
}

impl fmt::Display for Spins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Spins {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidInstance(format!("unexpected spin character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Spins)
    }
}

fn sign<S: Coupling>(s: i8) -> S {
    if s > 0 {
        S::one()
    } else {
        -S::one()
    }
}

/// An all-to-all Ising problem `E = -Σ_{i<j} J_ij s_i s_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingInstance<S> {
    spins: usize,
    couplings: BTreeMap<(usize, usize), S>,
}

impl<S: Coupling> IsingInstance<S> {
    /// Pairs are 0-based with `i < j < spins`; absent pairs have zero coupling.
    pub fn new(spins: usize, couplings: impl IntoIterator<Item = ((usize, usize), S)>) -> Result<Self> {
        if spins < 2 {
            return Err(Error::InvalidInstance(format!("need at least 2 spins, got {spins}")));
        }
        let mut map = BTreeMap::new();
        for ((i, j), value) in couplings {
            if !(i < j && j < spins) {
                return Err(Error::InvalidInstance(format!("pair ({i}, {j}) is not i < j < {spins}")));
            }
            if value.to_f64().is_none_or(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance(format!("coupling for ({i}, {j}) is not finite")));
            }
            if map.insert((i, j), value).is_some() {
                return Err(Error::InvalidInstance(format!("pair ({i}, {j}) given twice")));
            }
        }
        Ok(IsingInstance { spins, couplings: map })
    }

    /// The same coupling on every pair (negative: uniform antiferromagnet).
    pub fn uniform(spins: usize, value: S) -> Result<Self> {
        let pairs = (0..spins).flat_map(|i| (i + 1..spins).map(move |j| (i, j)));
        Self::new(spins, pairs.map(|p| (p, value.clone())))
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn coupling(&self, i: usize, j: usize) -> S {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).cloned().unwrap_or_else(S::zero)
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), &S)> {
        self.couplings.iter().map(|(&p, v)| (p, v))
    }

    pub fn energy(&self, s: &Spins) -> S {
        ising_energy(self, s)
    }
}

/// `-Σ_{i<j} J_ij s_i s_j`.
pub fn ising_energy<S: Coupling>(instance: &IsingInstance<S>, s: &Spins) -> S {
    assert_eq!(s.len(), instance.spins, "spin configuration length");
    instance.couplings.iter().fold(S::zero(), |acc, (&(i, j), value)| {
        acc - value.clone() * sign::<S>(s.get(i) * s.get(j))
    })
}

/// One four-body constraint. `modes` is sorted ascending; the two lowest modes
/// carry creation operators in the Hamiltonian and the rest annihilation
/// operators. A plaquette on the lowest row has three modes and one ancilla leg.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plaquette {
    pub modes: Vec<usize>,
    pub ancilla_legs: usize,
}

impl Plaquette {
    pub fn creators(&self) -> &[usize] {
        &self.modes[..2]
    }

    pub fn annihilators(&self) -> &[usize] {
        &self.modes[2..]
    }

    pub fn contains(&self, k: usize) -> bool {
        self.modes.contains(&k)
    }

    fn mask(&self) -> u64 {
        self.modes.iter().fold(0, |m, &k| m | 1 << k)
    }
}

/// The triangular LHZ layout for `N` Ising spins; independent of couplings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LhzLayout {
    spins: usize,
    pairs: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
    plaquettes: Vec<Plaquette>,
    z: Vec<usize>,
}

impl LhzLayout {
    pub fn new(spins: usize) -> Result<Self> {
        if spins < 2 {
            return Err(Error::InvalidInstance(format!("need at least 2 spins, got {spins}")));
        }
        let pairs: Vec<_> = (1..spins)
            .flat_map(|r| (0..spins - r).map(move |i| (i, i + r)))
            .collect();
        let index: BTreeMap<_, _> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();

        // Plaquette between rows r and r+1: top (i, i+r+1), sides (i, i+r) and
        // (i+1, i+r+1), bottom (i+1, i+r) on row r-1 or the ancilla when r = 1.
        let mut plaquettes = Vec::new();
        for r in 1..spins.saturating_sub(1) {
            for i in 0..spins - r - 1 {
                let top = index[&(i, i + r + 1)];
                let left = index[&(i, i + r)];
                let right = index[&(i + 1, i + r + 1)];
                let plaquette = if r == 1 {
                    Plaquette { modes: vec![left, right, top], ancilla_legs: 1 }
                } else {
                    let bottom = index[&(i + 1, i + r)];
                    Plaquette { modes: vec![bottom, left, right, top], ancilla_legs: 0 }
                };
                debug_assert!(plaquette.modes.windows(2).all(|w| w[0] < w[1]));
                plaquettes.push(plaquette);
            }
        }

        let mut z = vec![0; pairs.len()];
        for p in &plaquettes {
            for &k in &p.modes {
                z[k] += 1;
            }
        }
        Ok(LhzLayout { spins, pairs, index, plaquettes, z })
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    /// Number of LHZ spins (oscillators), `N(N-1)/2`.
    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, k: usize) -> (usize, usize) {
        self.pairs[k]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.index.get(&key).copied()
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    /// Number of plaquettes touching each mode.
    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn mean_z(&self) -> f64 {
        self.z.iter().sum::<usize>() as f64 / self.z.len() as f64
    }

    /// The nearest-neighbour modes, which alone determine the Ising spins.
    pub fn readout_modes(&self) -> std::ops::Range<usize> {
        0..self.spins - 1
    }

    pub fn encode(&self, ising: &Spins) -> Spins {
        assert_eq!(ising.len(), self.spins, "Ising configuration length");
        Spins(self.pairs.iter().map(|&(i, j)| ising.get(i) * ising.get(j)).collect())
    }

    /// Ising spins from the readout-mode signs, with the first spin fixed to `+1`.
    pub fn decode(&self, readout: &Spins) -> Spins {
        assert_eq!(readout.len(), self.spins - 1, "readout configuration length");
        let mut out = Vec::with_capacity(self.spins);
        out.push(1i8);
        for k in 0..self.spins - 1 {
            out.push(out[k] * readout.get(k));
        }
        Spins(out)
    }

    /// Number of plaquettes whose spin product is `-1`.
    pub fn broken(&self, s: &Spins) -> usize {
        let bits = s.to_bits();
        self.plaquettes.iter().filter(|p| (bits & p.mask()).count_ones() % 2 == 1).count()
    }

    fn masks(&self) -> Vec<u64> {
        self.plaquettes.iter().map(Plaquette::mask).collect()
    }
}

/// An Ising instance mapped onto the LHZ layout, couplings normalized so that
/// `Σ_k |J_k| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LhzInstance<S> {
    layout: LhzLayout,
    couplings: Vec<S>,
    normalization: S,
}

/// Map an Ising instance onto the LHZ layout and normalize its couplings.
pub fn build_lhz<S: Coupling>(instance: &IsingInstance<S>) -> Result<LhzInstance<S>> {
    let layout = LhzLayout::new(instance.spins())?;
    let raw: Vec<S> = layout.pairs().iter().map(|&(i, j)| instance.coupling(i, j)).collect();
    let normalization = raw.iter().fold(S::zero(), |acc, j| acc + j.abs());
    if normalization.is_zero() {
        return Err(Error::InvalidInstance("all couplings are zero".into()));
    }
    let couplings = raw.into_iter().map(|j| j / normalization.clone()).collect();
    Ok(LhzInstance { layout, couplings, normalization })
}

impl<S: Coupling> LhzInstance<S> {
    pub fn layout(&self) -> &LhzLayout {
        &self.layout
    }

    pub fn spins(&self) -> usize {
        self.layout.spins()
    }

    pub fn modes(&self) -> usize {
        self.layout.modes()
    }

    pub fn constraints(&self) -> usize {
        self.layout.plaquettes().len()
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        self.layout.plaquettes()
    }

    pub fn z(&self) -> &[usize] {
        self.layout.z()
    }

    /// Normalized local fields `J_k`.
    pub fn couplings(&self) -> &[S] {
        &self.couplings
    }

    /// The factor `Σ|J_ij|` the raw couplings were divided by.
    pub fn normalization(&self) -> &S {
        &self.normalization
    }

    /// The normalized problem as an Ising instance.
    pub fn ising(&self) -> IsingInstance<S> {
        IsingInstance {
            spins: self.spins(),
            couplings: self
                .layout
                .pairs()
                .iter()
                .zip(&self.couplings)
                .filter(|(_, j)| !j.is_zero())
                .map(|(&p, j)| (p, j.clone()))
                .collect(),
        }
    }

    /// `-Σ_k J_k s̃_k`.
    pub fn field_energy(&self, s: &Spins) -> S {
        assert_eq!(s.len(), self.modes(), "LHZ configuration length");
        self.couplings
            .iter()
            .zip(s.as_slice())
            .fold(S::zero(), |acc, (j, &sk)| acc - j.clone() * sign::<S>(sk))
    }

    /// `-C Σ_plaquettes Π s̃`, with ancilla legs contributing `+1`.
    pub fn constraint_energy(&self, s: &Spins, c: &S) -> S {
        let total = self.constraints() as i64;
        let broken = self.layout.broken(s) as i64;
        -c.clone() * S::from_ratio(total - 2 * broken, 1)
    }

    pub fn energy(&self, s: &Spins, c: &S) -> S {
        lhz_energy(self, s, c)
    }
}

/// `E_LHZ = -Σ J_k s̃_k - C Σ s̃_k s̃_l s̃_m s̃_n`.
pub fn lhz_energy<S: Coupling>(lhz: &LhzInstance<S>, s: &Spins, c: &S) -> S {
    lhz.field_energy(s) + lhz.constraint_energy(s, c)
}

/// All minimizers of an Ising instance with the first spin fixed to `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundSet<S> {
    pub energy: S,
    /// Sorted lexicographically (`-1 < +1`).
    pub configs: Vec<Spins>,
}

impl<S> GroundSet<S> {
    pub fn contains(&self, s: &Spins) -> bool {
        self.configs.binary_search(s).is_ok()
    }
}

/// Exhaustive minimization over the `2^(N-1)` configurations with `s_1 = +1`.
pub fn brute_force_ising<S: Coupling>(instance: &IsingInstance<S>) -> Result<GroundSet<S>> {
    let n = instance.spins();
    if n > MAX_ISING_SPINS {
        return Err(Error::TooLarge { what: "Ising instance", size: n, limit: MAX_ISING_SPINS });
    }
    let scale = instance.couplings().fold(S::zero(), |acc, (_, j)| acc + j.abs());
    let tol = S::tie_tolerance(&scale);
    let mut best: Option<S> = None;
    let mut configs = Vec::new();
    for bits in 0..1u64 << (n - 1) {
        let s = Spins::from_bits(bits << 1, n);
        let e = instance.energy(&s);
        match &best {
            Some(b) if e.clone() - b.clone() > tol => {}
            Some(b) if (e.clone() - b.clone()).abs() <= tol => configs.push(s),
            _ => {
                best = Some(e);
                configs.clear();
                configs.push(s);
            }
        }
    }
    configs.sort();
    Ok(GroundSet { energy: best.expect("at least one configuration"), configs })
}

fn check_enumerable<S: Coupling>(lhz: &LhzInstance<S>) -> Result<()> {
    if lhz.modes() > MAX_LHZ_SPINS {
        return Err(Error::TooLarge { what: "LHZ register", size: lhz.modes(), limit: MAX_LHZ_SPINS });
    }
    Ok(())
}

/// For every broken-constraint count `b`, the minimum field energy
/// `-Σ J_k s̃_k` over configurations with exactly `b` broken plaquettes, and
/// the first minimizer in enumeration order. Index `b` is `None` when no
/// configuration breaks exactly `b` plaquettes.
pub fn field_minima_by_broken<S: Coupling>(lhz: &LhzInstance<S>) -> Result<Vec<Option<(S, Spins)>>> {
    check_enumerable(lhz)?;
    let l = lhz.modes();
    let masks = lhz.layout.masks();
    let mut best: Vec<Option<(S, u64)>> = vec![None; masks.len() + 1];
    for bits in 0..1u64 << l {
        let b = masks.iter().filter(|&&m| (bits & m).count_ones() % 2 == 1).count();
        let field = lhz.couplings.iter().enumerate().fold(S::zero(), |acc, (k, j)| {
            if bits >> k & 1 == 1 {
                acc + j.clone()
            } else {
                acc - j.clone()
            }
        });
        if best[b].as_ref().is_none_or(|(e, _)| field < *e) {
            best[b] = Some((field, bits));
        }
    }
    Ok(best
        .into_iter()
        .map(|entry| entry.map(|(e, bits)| (e, Spins::from_bits(bits, l))))
        .collect())
}

/// `E^(b)_LHZ`: the minimum LHZ energy among configurations with exactly `b`
/// broken constraints, with a minimizer. `None` if no such configuration exists.
pub fn min_lhz_with_broken<S: Coupling>(lhz: &LhzInstance<S>, c: &S, b: usize) -> Result<Option<(S, Spins)>> {
    let minima = field_minima_by_broken(lhz)?;
    Ok(minima.into_iter().nth(b).flatten().map(|(field, s)| {
        let total = lhz.constraints() as i64;
        let energy = field - c.clone() * S::from_ratio(total - 2 * b as i64, 1);
        (energy, s)
    }))
}

/// The tight lower bound on `C` above which every minimizer of `E_LHZ`
/// satisfies all constraints: `max_{b≥1} [F(0) - F(b)] / 2b` with `F(b)` the
/// minimum field energy at `b` broken constraints. Zero when there are no
/// constraints.
pub fn c_lower_bound<S: Coupling>(lhz: &LhzInstance<S>) -> Result<S> {
    let minima = field_minima_by_broken(lhz)?;
    let Some(Some((f0, _))) = minima.first() else {
        return Ok(S::zero());
    };
    let bound = minima
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(b, m)| m.as_ref().map(|(fb, _)| (f0.clone() - fb.clone()) / S::from_ratio(2 * b as i64, 1)))
        .fold(None::<S>, |acc, v| match acc {
            Some(a) if a >= v => Some(a),
            _ => Some(v),
        });
    Ok(bound.unwrap_or_else(S::zero))
}

/// Global minimum of `E_LHZ` over all `2^L` configurations (first minimizer
/// in enumeration order).
pub fn min_lhz<S: Coupling>(lhz: &LhzInstance<S>, c: &S) -> Result<(S, Spins)> {
    let minima = field_minima_by_broken(lhz)?;
    let total = lhz.constraints() as i64;
    minima
        .into_iter()
        .enumerate()
        .filter_map(|(b, m)| m.map(|(f, s)| (f - c.clone() * S::from_ratio(total - 2 * b as i64, 1), s)))
        .fold(None::<(S, Spins)>, |acc, (e, s)| match acc {
            Some((a, sa)) if a <= e => Some((a, sa)),
            _ => Some((e, s)),
        })
        .ok_or_else(|| Error::InvalidInstance("empty LHZ register".into()))
}

/// Ising spins from readout-mode signs (`s_1 = +1`).
pub fn decode<S: Coupling>(lhz: &LhzInstance<S>, readout: &Spins) -> Spins {
    lhz.layout.decode(readout)
}
