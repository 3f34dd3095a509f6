//! Fixed-step RK4 integration of `i dψ/dt = H(t) ψ` from the vacuum.
//!
//! Each step subtracts the current energy `⟨ψ|H|ψ⟩` from `H`. This changes only
//! the global phase but keeps the populated frequencies near zero, where RK4's
//! amplitude error is negligible.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{level_populations, write_snapshot, StateVector};
use crate::hamiltonian::{Hamiltonian, SimParams};
use crate::lhz::LhzInstance;
use crate::scalar::{Coupling, Real};

/// Largest `|λ| dt` for which RK4 is stable on the imaginary axis.
pub const RK4_STABILITY_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Fraction of the stability limit used when `dt` is chosen automatically.
pub const AUTO_DT_SAFETY: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Largest allowed `|‖ψ‖ − 1|`.
    pub tolerance: f64,
    pub checkpoint_every: usize,
    pub renormalize: bool,
    pub energy_shift: bool,
    /// Bytes the integrator may allocate for state vectors.
    pub memory_budget: u128,
    pub snapshot_every: Option<usize>,
    pub snapshot_dir: Option<PathBuf>,
    /// Print a line to standard error at every checkpoint.
    pub progress: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tolerance: 1e-6,
            checkpoint_every: 500,
            renormalize: false,
            energy_shift: true,
            memory_budget: 4 << 30,
            snapshot_every: None,
            snapshot_dir: None,
            progress: false,
        }
    }
}

/// Scalar diagnostics at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub photons: Vec<f64>,
    pub tail: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EvolutionReport<T> {
    pub state: StateVector<T>,
    pub norm_drift: f64,
    pub max_tail: f64,
    pub wall_time: Duration,
    pub steps: usize,
    pub dt: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl<T> EvolutionReport<T> {
    pub fn final_photons(&self) -> &[f64] {
        &self.checkpoints.last().expect("final checkpoint is always recorded").photons
    }
}

/// Largest spectral radius bound of `H(t) − E` over the run, sampled at
/// `samples + 1` times. `E` may be any energy the state can reach, so it is
/// placed at the bottom of the spectrum bound.
pub fn max_spectral_radius<T: Real>(ham: &Hamiltonian<T>, samples: usize) -> Result<f64> {
    let t_final = ham.params().t_final;
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let terms = ham.at(t_final * i as f64 / samples as f64)?;
        let (lo, _) = terms.local_spectrum_bounds();
        worst = worst.max(terms.spectral_radius_bound(lo - terms.coupling_norm_bound()));
    }
    Ok(worst)
}

/// Step size actually used: `params.dt`, or the stable one if `auto_dt` is set.
pub fn choose_dt<T: Real>(ham: &Hamiltonian<T>) -> Result<(f64, usize)> {
    let params = ham.params();
    let radius = max_spectral_radius(ham, 64)?;
    let limit = RK4_STABILITY_LIMIT / radius;
    let dt = if params.auto_dt { params.dt.min(AUTO_DT_SAFETY * limit) } else { params.dt };
    let steps = params.steps_for(dt);
    let dt = params.t_final / steps as f64;
    if dt >= limit {
        return Err(Error::UnstableStep { dt, limit, radius });
    }
    Ok((dt, steps))
}

/// Evolve the vacuum of `lhz`'s network through the full schedule.
pub fn evolve<T: Real, S: Coupling>(
    params: &SimParams,
    lhz: &LhzInstance<S>,
    opts: &EvolveOptions,
) -> Result<EvolutionReport<T>> {
    let ham = Hamiltonian::new(params, lhz)?;
    evolve_hamiltonian(&ham, StateVector::vacuum(ham.space()), opts)
}

pub fn evolve_hamiltonian<T: Real>(
    ham: &Hamiltonian<T>,
    initial: StateVector<T>,
    opts: &EvolveOptions,
) -> Result<EvolutionReport<T>> {
    let space = ham.space();
    if initial.space() != space {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: initial.space().dim() });
    }
    let required = 4 * space.state_bytes::<T>();
    if required > opts.memory_budget {
        return Err(Error::MemoryBudget { required, budget: opts.memory_budget });
    }
    if opts.checkpoint_every == 0 {
        return Err(Error::InvalidParams("checkpoint cadence must be positive".into()));
    }
    let (dt, steps) = choose_dt(ham)?;
    let start = Instant::now();

    let dim = space.dim();
    let mut y = initial.into_amplitudes();
    let mut acc = vec![Complex::<T>::zero(); dim];
    let mut stage = vec![Complex::<T>::zero(); dim];
    let mut k = vec![Complex::<T>::zero(); dim];

    let h = T::of(dt);
    let half = T::of(0.5) * h;
    let sixth = h / T::of(6.0);
    let third = h / T::of(3.0);
    let initial_norm = norm_sqr(&y).to_f64_lossy().sqrt();
    let mut norm_drift = 0.0f64;
    let mut max_tail = 0.0f64;
    let mut checkpoints = Vec::new();

    let mut record = |step: usize, y: &[Complex<T>], norm: f64, checkpoints: &mut Vec<Checkpoint>| -> Result<()> {
        let state = StateVector::from_amplitudes(space, y.to_vec())?;
        let mut photons = Vec::with_capacity(space.modes());
        let mut tail = Vec::with_capacity(space.modes());
        for mode in 0..space.modes() {
            let pops = level_populations(&state, mode)?;
            photons.push(pops.iter().enumerate().map(|(n, p)| n as f64 * p.to_f64_lossy()).sum());
            tail.push(pops[pops.len() - 1].to_f64_lossy());
        }
        max_tail = tail.iter().copied().fold(max_tail, f64::max);
        let time = step as f64 * dt;
        if opts.progress {
            eprintln!("step {step}/{steps} t = {time:.3} norm = {norm:.12} tail = {:.3e}", tail.iter().copied().fold(0.0, f64::max));
        }
        checkpoints.push(Checkpoint { step, time, norm, photons, tail });
        Ok(())
    };
    record(0, &y, initial_norm, &mut checkpoints)?;

    for step in 0..steps {
        let t = step as f64 * dt;
        let h_start = ham.at(t)?;
        let h_mid = ham.at(t + 0.5 * dt)?;
        let h_end = ham.at((t + dt).min(ham.params().t_final))?;

        // k1 = −i (H − E) y, with E the current energy.
        h_start.apply_into(&y, &mut k, T::zero())?;
        let shift = if opts.energy_shift {
            crate::fock::dot_conj(&k, &y).re / norm_sqr(&y)
        } else {
            T::zero()
        };
        for i in 0..dim {
            let ki = times_minus_i(k[i] - y[i].scale(shift));
            k[i] = ki;
            acc[i] = y[i] + ki.scale(sixth);
            stage[i] = y[i] + ki.scale(half);
        }
        for (terms, weight, next) in [(&h_mid, third, half), (&h_mid, third, h)] {
            terms.apply_into(&stage, &mut k, shift)?;
            for i in 0..dim {
                let ki = times_minus_i(k[i]);
                acc[i] += ki.scale(weight);
                stage[i] = y[i] + ki.scale(next);
            }
        }
        h_end.apply_into(&stage, &mut k, shift)?;
        let mut norm = T::zero();
        for i in 0..dim {
            let v = acc[i] + times_minus_i(k[i]).scale(sixth);
            norm += v.norm_sqr();
            y[i] = v;
        }

        let norm = norm.to_f64_lossy().sqrt();
        let drift = (norm - initial_norm).abs();
        norm_drift = norm_drift.max(drift);
        if drift.is_nan() || drift > opts.tolerance {
            return Err(Error::NormDrift { step: step + 1, time: t + dt, drift, tolerance: opts.tolerance });
        }
        if opts.renormalize {
            let scale = T::of(initial_norm / norm);
            for v in &mut y {
                *v = v.scale(scale);
            }
        }

        let done = step + 1;
        if done % opts.checkpoint_every == 0 || done == steps {
            record(done, &y, norm, &mut checkpoints)?;
        }
        if let (Some(every), Some(dir)) = (opts.snapshot_every, &opts.snapshot_dir) {
            if every > 0 && done % every == 0 {
                let state = StateVector::from_amplitudes(space, y.clone())?;
                let file = std::fs::File::create(dir.join(format!("state_{done:08}.bin")))?;
                write_snapshot(std::io::BufWriter::new(file), &state, done as f64 * dt)?;
            }
        }
    }

    Ok(EvolutionReport {
        state: StateVector::from_amplitudes(space, y)?,
        norm_drift,
        max_tail,
        wall_time: start.elapsed(),
        steps,
        dt,
        checkpoints,
    })
}

fn times_minus_i<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.im, -z.re)
}

fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |s, a| s + a.norm_sqr())
}
