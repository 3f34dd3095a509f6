//! Time-stepping checks: convergence order, step halving, and a dense
//! piecewise-exponential reference.

use lhz_kpo::evolve::{evolve, evolve_hamiltonian, EvolveOptions};
use lhz_kpo::hamiltonian::Hamiltonian;
use lhz_kpo::lhz::build_lhz;
use lhz_kpo::{IsingInstance, LhzInstance, SimParams, StateVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

fn lhz3() -> LhzInstance<f64> {
    build_lhz(&IsingInstance::new(3, [((0, 1), 0.7), ((1, 2), -0.4), ((0, 2), 0.2)]).unwrap()).unwrap()
}

fn params(dt: f64) -> SimParams {
    SimParams { levels: 4, t_final: 4.0, dt, xi: 0.5, c: 0.5, correction: true, ..SimParams::default() }
}

/// `min_φ ‖a − e^{iφ} b‖` without rescaling either state.
fn distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let overlap: Complex<f64> = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    (na + nb - 2.0 * overlap.norm()).max(0.0).sqrt()
}

fn random_state(ham: &Hamiltonian<f64>) -> StateVector<f64> {
    let mut x = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let amps = (0..ham.space().dim()).map(|_| Complex::new(next(), next())).collect();
    let mut psi = StateVector::from_amplitudes(ham.space(), amps).unwrap();
    psi.normalize();
    psi
}

fn refinement_errors(p: impl Fn(f64) -> SimParams, random_start: bool, dts: &[f64], reference: f64) -> Vec<f64> {
    let lhz = lhz3();
    let opts = EvolveOptions { tolerance: 1e-3, ..Default::default() };
    let run = |dt: f64| {
        let ham = Hamiltonian::<f64>::new(&p(dt), &lhz).unwrap();
        let start = if random_start { random_state(&ham) } else { StateVector::vacuum(ham.space()) };
        evolve_hamiltonian(&ham, start, &opts).unwrap().state
    };
    let reference = run(reference);
    dts.iter().map(|&dt| distance(run(dt).amplitudes(), reference.amplitudes())).collect()
}

fn slopes(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn rk4_converges_at_fourth_order() {
    // Pump ramp below threshold: smooth coefficients, so the scheme's own order shows.
    let p = |dt| SimParams { pump_final: 0.9, ..params(dt) };
    let errs = refinement_errors(p, true, &[0.04, 0.02, 0.01], 0.0025);
    assert!(slopes(&errs).iter().all(|&s| s >= 3.5), "errors {errs:?}, slopes {:?}", slopes(&errs));
}

#[test]
fn bifurcation_onset_limits_the_observed_order() {
    // β = α ∝ √(t − t_b) is not smooth at the onset, which caps the global order below four.
    let errs = refinement_errors(params, false, &[0.04, 0.02, 0.01], 0.0025);
    let s = slopes(&errs);
    assert!(s.iter().all(|&x| x >= 2.0), "errors {errs:?}, slopes {s:?}");
    assert!(errs[2] < 2e-4);
}

#[test]
fn halving_the_default_step_changes_little() {
    // Three modes, ten levels, default coupling, a shortened ramp.
    let p = |dt| SimParams { levels: 10, t_final: 50.0, dt, ..SimParams::default() };
    let lhz = build_lhz(&IsingInstance::uniform(3, -1.0).unwrap()).unwrap();
    let run = |dt| evolve::<f64, _>(&p(dt), &lhz, &EvolveOptions::default()).unwrap().state;
    let a = run(0.01);
    let b = run(0.005);
    assert!(1.0 - a.fidelity(&b) < 1e-8, "{}", 1.0 - a.fidelity(&b));
}

#[test]
fn matches_dense_midpoint_exponentials() {
    let p = params(0.005);
    let lhz = lhz3();
    let ham = Hamiltonian::<f64>::new(&p, &lhz).unwrap();
    let dim = ham.space().dim();
    let steps = 4000;
    let h = p.t_final / steps as f64;
    let mut v = DVector::from_element(dim, Complex::new(0.0, 0.0));
    v[0] = Complex::new(1.0, 0.0);
    for s in 0..steps {
        let m = DMatrix::from_row_slice(dim, dim, &ham.at((s as f64 + 0.5) * h).unwrap().dense_matrix().unwrap());
        v = (m * Complex::new(0.0, -h)).exp() * v;
    }
    let ours = evolve::<f64, _>(&p, &lhz, &EvolveOptions::default()).unwrap();
    let d = distance(ours.state.amplitudes(), v.as_slice());
    assert!(d < 1e-4, "{d}");
    assert!(ours.norm_drift < 1e-9);
}

#[test]
fn single_precision_tracks_double() {
    let p = params(0.01);
    let a = evolve::<f64, _>(&p, &lhz3(), &EvolveOptions::default()).unwrap();
    let b = evolve::<f32, _>(&p, &lhz3(), &EvolveOptions { tolerance: 1e-3, ..Default::default() }).unwrap();
    let b64: Vec<Complex<f64>> = b.state.cast::<f64>().into_amplitudes();
    assert!(distance(a.state.amplitudes(), &b64) < 1e-3);
}

#[test]
fn checkpoints_are_regular() {
    let opts = EvolveOptions { checkpoint_every: 100, ..Default::default() };
    let report = evolve::<f64, _>(&params(0.01), &lhz3(), &opts).unwrap();
    let steps: Vec<usize> = report.checkpoints.iter().map(|c| c.step).collect();
    assert_eq!(steps, vec![0, 100, 200, 300, 400]);
    assert!(report.checkpoints.iter().all(|c| (c.norm - 1.0).abs() < 1e-6));
}
