//! Quadrature-sign readout and the success metrics built on it.
//!
//! Only the `N − 1` nearest-neighbour LHZ spins (modes `0..N−1`) are needed to
//! decode an Ising configuration, so the remaining modes are traced out first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{mean_photon, reduce, sign_projectors, StateVector};
use crate::lhz::{brute_force_ising, IsingInstance, LhzInstance, LhzLayout, Spins};
use crate::scalar::{Coupling, Real};

/// Probabilities of the `2^(N−1)` row-one sign patterns. Index bit `k` set
/// means readout mode `k` reads `−1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinDistribution {
    pub spins: usize,
    pub probabilities: Vec<f64>,
    pub photons: Vec<f64>,
    /// `‖ψ‖²` before normalization.
    pub norm_sqr: f64,
}

impl SpinDistribution {
    pub fn readout_modes(&self) -> usize {
        self.spins - 1
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn pattern(&self, bits: usize) -> Spins {
        Spins::from_bits(bits as u64, self.readout_modes())
    }

    /// Probability of a readout pattern.
    pub fn probability(&self, readout: &Spins) -> f64 {
        self.probabilities[readout.to_bits() as usize]
    }

    /// Probability of an Ising configuration with `s_1 = +1`.
    pub fn ising_probability(&self, ising: &Spins) -> f64 {
        let readout = LhzLayout::new(self.spins).expect("valid spin count").encode(ising);
        self.probability(&Spins::new(readout.as_slice()[..self.readout_modes()].to_vec()).expect("±1"))
    }

    /// Decoded Ising configurations with their probabilities, in pattern order.
    pub fn ising_configs(&self) -> Vec<(Spins, f64)> {
        let layout = LhzLayout::new(self.spins).expect("valid spin count");
        self.probabilities
            .iter()
            .enumerate()
            .map(|(bits, &p)| (layout.decode(&self.pattern(bits)), p))
            .collect()
    }
}

/// Sign-pattern distribution of the readout modes of `ψ`.
pub fn spin_distribution<T: Real, S: Coupling>(psi: &StateVector<T>, lhz: &LhzInstance<S>) -> Result<SpinDistribution> {
    let space = psi.space();
    if space.modes() != lhz.modes() {
        return Err(Error::DimensionMismatch { expected: lhz.modes(), got: space.modes() });
    }
    let keep: Vec<usize> = lhz.layout().readout_modes().collect();
    let rho = reduce(psi, &keep)?;
    let proj = sign_projectors::<T>(space.levels());
    let norm_sqr = rho.trace().re.to_f64_lossy();
    let probabilities = rho
        .sign_pattern_probabilities(&proj)
        .into_iter()
        .map(|p| p.to_f64_lossy() / norm_sqr)
        .collect();
    let photons = (0..space.modes())
        .map(|k| Ok(mean_photon(psi, k)?.to_f64_lossy() / norm_sqr))
        .collect::<Result<_>>()?;
    Ok(SpinDistribution { spins: lhz.spins(), probabilities, photons, norm_sqr })
}

/// Sign-pattern distribution over every mode, without tracing anything out.
/// Index bit `k` set means mode `k` reads `−1`. Small networks only.
pub fn full_distribution<T: Real>(psi: &StateVector<T>) -> Result<Vec<f64>> {
    let space = psi.space();
    let all: Vec<usize> = (0..space.modes()).collect();
    let rho = reduce(psi, &all)?;
    let norm_sqr = rho.trace().re;
    Ok(rho
        .sign_pattern_probabilities(&sign_projectors(space.levels()))
        .into_iter()
        .map(|p| (p / norm_sqr).to_f64_lossy())
        .collect())
}

/// Row-one marginal of a full distribution, for cross-checks.
pub fn readout_marginal(full: &[f64], readout_modes: usize) -> Vec<f64> {
    let mut out = vec![0.0; 1 << readout_modes];
    let mask = (1 << readout_modes) - 1;
    for (bits, p) in full.iter().enumerate() {
        out[bits & mask] += p;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub success: f64,
    pub failure: f64,
    pub residual_energy: f64,
}

/// Success probability and residual energy against `instance`'s exact ground set.
pub fn metrics<S: Coupling>(dist: &SpinDistribution, instance: &IsingInstance<S>) -> Result<Metrics> {
    if instance.spins() != dist.spins {
        return Err(Error::DimensionMismatch { expected: instance.spins(), got: dist.spins });
    }
    let ground = brute_force_ising(instance)?;
    let e_min = ground.energy.to_f64().expect("finite energy");
    let mut success = 0.0;
    let mut mean_energy = 0.0;
    for (config, p) in dist.ising_configs() {
        if ground.contains(&config) {
            success += p;
        }
        mean_energy += p * instance.energy(&config).to_f64().expect("finite energy");
    }
    let residual_energy = (mean_energy - e_min * dist.total()).max(0.0);
    Ok(Metrics { success, failure: 1.0 - success, residual_energy })
}

/// Ratio of a metric without the correction to the same metric with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImprovementRate {
    Finite(f64),
    /// The corrected run attained zero while the uncorrected one did not.
    Perfect,
}

impl ImprovementRate {
    pub fn of(without: f64, with: f64) -> Self {
        if with > 0.0 {
            ImprovementRate::Finite(without / with)
        } else if without > 0.0 {
            ImprovementRate::Perfect
        } else {
            ImprovementRate::Finite(1.0)
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            ImprovementRate::Finite(x) => *x,
            ImprovementRate::Perfect => f64::INFINITY,
        }
    }

    pub fn improved(&self) -> bool {
        self.value() > 1.0
    }
}

impl std::fmt::Display for ImprovementRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImprovementRate::Finite(x) => write!(f, "{x}"),
            ImprovementRate::Perfect => f.write_str("perfect"),
        }
    }
}

/// `(P_f ratio, E_res ratio)`.
pub fn improvement_rates(without: &Metrics, with: &Metrics) -> (ImprovementRate, ImprovementRate) {
    (
        ImprovementRate::of(without.failure, with.failure),
        ImprovementRate::of(without.residual_energy, with.residual_energy),
    )
}
