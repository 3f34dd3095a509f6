//! Acceptance criteria A1–A6. Each test prints one `PASS` or `FAIL` line.
//!
//! A1–A3 need the full four-spin, 13-level network over the whole ramp, about
//! 40 hours per run on one core; they are ignored by default and run with
//! `cargo test --release --test acceptance -- --ignored --nocapture`.

use std::time::{Duration, Instant};

use lhz_kpo::evolve::{evolve, EvolveOptions};
use lhz_kpo::experiments::{gen_random_instance, run_batch, run_instance, ExperimentConfig, ExperimentKind, Preset};
use lhz_kpo::fock::{sign_projectors, StateVector};
use lhz_kpo::hamiltonian::Hamiltonian;
use lhz_kpo::lhz::{brute_force_ising, build_lhz, c_lower_bound, LhzLayout, Spins};
use lhz_kpo::readout::{full_distribution, spin_distribution};
use lhz_kpo::variational::MeanField;
use lhz_kpo::{Exact, IsingInstance, LhzInstanceExact, SimParams};
use num_complex::Complex;

fn report(id: &str, checks: &[(&str, bool)]) {
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    if failed.is_empty() {
        println!("{id} PASS");
    } else {
        println!("{id} FAIL: {}", failed.join(", "));
    }
    assert!(failed.is_empty(), "{id} failed: {failed:?}");
}

fn full_params(c: f64, xi: f64, correction: bool) -> SimParams {
    SimParams { levels: 13, auto_dt: true, ..SimParams::default() }.with_coupling(c, xi).with_correction(correction)
}

fn full_opts() -> EvolveOptions {
    EvolveOptions { progress: true, checkpoint_every: 5000, ..Default::default() }
}

fn uniform_af_runs() -> [lhz_kpo::experiments::RunResult; 2] {
    let inst = IsingInstance::uniform(4, -1.0).unwrap();
    [false, true].map(|corr| run_instance(&full_params(0.3, 0.3, corr), &inst, &full_opts()).unwrap())
}

#[test]
#[ignore = "about 40 hours per run at four spins and 13 levels"]
fn a1_photon_number_inhomogeneity() {
    let [without, with] = uniform_af_runs();
    let n = &without.photons;
    println!("without {n:?}\nwith {:?}", with.photons);
    let close = |a: f64, b: f64| (a - b).abs() <= 0.05 * a.max(b);
    report(
        "A1",
        &[
            ("n2 > n4, n5", n[1] > n[3] && n[1] > n[4]),
            ("n4 ≈ n5", close(n[3], n[4])),
            ("n4, n5 > n1, n3, n6", [n[3], n[4]].iter().all(|&m| [n[0], n[2], n[5]].iter().all(|&x| m > x))),
            ("n1 ≈ n3 ≈ n6", close(n[0], n[2]) && close(n[0], n[5]) && close(n[2], n[5])),
            ("corrected within 3 ± 0.3", with.photons.iter().all(|&x| (x - 3.0).abs() <= 0.3)),
        ],
    );
}

#[test]
#[ignore = "about 40 hours per run at four spins and 13 levels"]
fn a2_ground_state_probabilities() {
    let [without, with] = uniform_af_runs();
    let grounds = ["++--", "+-+-", "+--+"];
    let mass = |r: &lhz_kpo::experiments::RunResult| grounds.iter().map(|g| r.ising_probability(g)).sum::<f64>();
    let p = |r: &lhz_kpo::experiments::RunResult, g: &str| r.ising_probability(g);
    report(
        "A2",
        &[
            ("ground mass ≥ 0.95 without", mass(&without) >= 0.95),
            ("ground mass ≥ 0.95 with", mass(&with) >= 0.95),
            ("++-- largest without", without.distribution.iter().all(|d| d.ising == "++--" || d.probability < p(&without, "++--"))),
            ("|P(++--) − P(+--+)| ≤ 0.1 with", (p(&with, "++--") - p(&with, "+--+")).abs() <= 0.1),
        ],
    );
}

#[test]
#[ignore = "40 runs of about 40 hours each"]
fn a3_correction_benefit_on_random_instances() {
    let mut config = ExperimentConfig::preset(ExperimentKind::RandomBatch, Preset::Full);
    config.instances = 20;
    let report_ = run_batch(&config, &full_opts()).unwrap();
    let agg = report_.aggregates.expect("some instances completed");
    println!("{agg:?}");
    report(
        "A3",
        &[
            ("all completed", agg.failed == 0),
            ("mean P_s with ≥ 0.90", agg.mean_success_with >= 0.90),
            ("mean P_s with > without", agg.mean_success_with > agg.mean_success_without),
            ("P_f improved on ≥ 80%", agg.improved_fraction >= 0.8),
        ],
    );
}

/// Three-spin instances with a unique ground configuration, by seed order.
fn nondegenerate_instances(count: usize) -> Vec<IsingInstance<f64>> {
    (0..)
        .map(|seed| gen_random_instance::<f64>(3, seed).unwrap())
        .filter(|inst| brute_force_ising(inst).unwrap().configs.len() == 1)
        .take(count)
        .collect()
}

#[test]
fn a4_meanfield_agreement() {
    let mut checks: Vec<(String, bool)> = Vec::new();
    for (i, inst) in nondegenerate_instances(3).iter().enumerate() {
        let lhz = build_lhz(inst).unwrap();
        let params = full_params(0.3, 0.3, false);
        let mf = MeanField::at_end(&params, &lhz).unwrap();
        let ground = mf.ground_branch().unwrap();
        let predicted = mf.photon_prediction(&ground.branch);
        let sim = run_instance(&params, inst, &EvolveOptions::default()).unwrap();
        let worst = predicted.iter().zip(&sim.photons).map(|(p, s)| ((p - s) / s).abs()).fold(0.0, f64::max);
        println!("instance {i}: predicted {predicted:?} simulated {:?} worst {worst:.4}", sim.photons);
        checks.push((format!("instance {i} photons within 10%"), worst <= 0.10));
        checks.push((format!("instance {i} Newton residual"), ground.residual < 1e-12));
    }
    let uniform = IsingInstance::uniform(4, -1.0).unwrap();
    let randoms = (0..5).map(|s| gen_random_instance::<f64>(4, s).unwrap());
    for (i, inst) in std::iter::once(uniform).chain(randoms).enumerate() {
        let lhz = build_lhz(&inst).unwrap();
        let xis = [0.05, 0.1, 0.2];
        let gaps: Vec<f64> = xis
            .iter()
            .map(|&xi| {
                let mf = MeanField::at_end(&SimParams { xi, ..SimParams::default() }, &lhz).unwrap();
                let sol = mf.ground_branch().unwrap();
                let first = mf.first_order_amplitudes(&sol.branch);
                sol.alpha.iter().zip(&first).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        let slope = (gaps[2] / gaps[0]).ln() / (xis[2] / xis[0]).ln();
        checks.push((format!("slope {slope:.3} ≥ 1.8 on instance {i}"), slope >= 1.8));
    }
    let checks: Vec<(&str, bool)> = checks.iter().map(|(n, ok)| (n.as_str(), *ok)).collect();
    report("A4", &checks);
}

fn minimizers_satisfy(lhz: &LhzInstanceExact, c: &Exact) -> bool {
    let l = lhz.modes();
    let configs: Vec<Spins> = (0..1u64 << l).map(|b| Spins::from_bits(b, l)).collect();
    let energies: Vec<Exact> = configs.iter().map(|s| lhz.energy(s, c)).collect();
    let min = energies.iter().min().unwrap();
    configs.iter().zip(&energies).filter(|(_, e)| *e == min).all(|(s, _)| lhz.layout().broken(s) == 0)
}

#[test]
fn a5_classical_oracle_suite() {
    let start = Instant::now();
    let step = Exact::new(1, 100);
    let (mut tight, mut at_most_one) = (true, true);
    for seed in 0..50 {
        let lhz = build_lhz(&gen_random_instance::<Exact>(4, seed).unwrap()).unwrap();
        let bound = c_lower_bound(&lhz).unwrap();
        at_most_one &= bound <= Exact::from_integer(1);
        tight &= minimizers_satisfy(&lhz, &(bound + step));
        if bound >= step {
            tight &= !minimizers_satisfy(&lhz, &(bound - step));
        }
    }
    let af = build_lhz(&IsingInstance::uniform(4, Exact::from_integer(-1)).unwrap()).unwrap();
    report(
        "A5",
        &[
            ("bound tight on 50 instances", tight),
            ("bound ≤ 1", at_most_one),
            ("uniform AF bound = 1/6", c_lower_bound(&af).unwrap() == Exact::new(1, 6)),
            ("runtime in seconds", start.elapsed() < Duration::from_secs(30)),
        ],
    );
}

#[test]
fn a6_structural_invariants() {
    let start = Instant::now();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    // N = 2 is one mode and no plaquettes; its matrix is written out by hand.
    let two = build_lhz(&IsingInstance::new(2, [((0, 1), -1.0)]).unwrap()).unwrap();
    let params = SimParams { levels: 6, ..SimParams::default() };
    let ham = Hamiltonian::<f64>::new(&params, &two).unwrap();
    let t = 400.0;
    let terms = ham.at(t).unwrap();
    let d = params.levels;
    let p = params.pump_final * t / params.t_final;
    let drive = -params.xi * ((p - params.detuning) / params.kerr).powf(1.5) * two.couplings()[0];
    let oracle = |i: usize, j: usize| -> f64 {
        let (lo, hi) = (i.min(j) as f64, i.max(j));
        match hi - i.min(j) {
            0 => params.kerr / 2.0 * lo * (lo - 1.0) + params.detuning * lo,
            1 => drive * (lo + 1.0).sqrt(),
            2 => -p / 2.0 * ((lo + 1.0) * (lo + 2.0)).sqrt(),
            _ => 0.0,
        }
    };
    let matches = (0..d).all(|j| {
        let col = terms.apply(&StateVector::basis(ham.space(), &[j])).unwrap();
        (0..d).all(|i| (col.amplitudes()[i] - Complex::new(oracle(i, j), 0.0)).norm() < 1e-12)
    });
    let m = terms.dense_matrix().unwrap();
    let herm = (0..d).all(|i| (0..d).all(|j| (m[i * d + j] - m[j * d + i].conj()).norm() < 1e-12));
    checks.push(("H matches hand-built oracle and is hermitian", matches && herm));

    // Projector completeness and idempotency on the parity-definite part.
    let mut complete = true;
    let mut idempotent = true;
    for d in 2..=13 {
        let p = sign_projectors::<f64>(d);
        for i in 0..d {
            for j in 0..d {
                let id = if i == j { 1.0 } else { 0.0 };
                complete &= (p.plus()[i * d + j] + p.minus()[i * d + j] - id).abs() < 1e-14;
                let sq: f64 = (0..d).map(|k| p.plus()[i * d + k] * p.plus()[k * d + j]).sum();
                if d % 2 == 0 {
                    idempotent &= (sq - p.plus()[i * d + j]).abs() < 1e-12;
                }
            }
        }
    }
    checks.push(("projectors complete", complete));
    checks.push(("projectors idempotent (even d)", idempotent));

    // decode ∘ encode.
    let decode_ok = (2..=6).all(|n| {
        let layout = LhzLayout::new(n).unwrap();
        (0..1u64 << (n - 1)).all(|bits| {
            let ising = Spins::from_bits(bits << 1, n);
            let enc = layout.encode(&ising);
            layout.decode(&Spins::new(enc.as_slice()[..n - 1].to_vec()).unwrap()) == ising
        })
    });
    checks.push(("decode ∘ encode = id", decode_ok));

    // RK4 refinement on a smooth sub-threshold ramp from a generic state.
    let lhz3 = build_lhz(&IsingInstance::new(3, [((0, 1), 0.7), ((1, 2), -0.4), ((0, 2), 0.2)]).unwrap()).unwrap();
    let run = |dt: f64| {
        let p = SimParams { levels: 4, t_final: 4.0, pump_final: 0.9, dt, xi: 0.5, c: 0.5, ..SimParams::default() };
        let ham = Hamiltonian::<f64>::new(&p, &lhz3).unwrap();
        let amps = (0..ham.space().dim()).map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos())).collect();
        let mut psi = StateVector::from_amplitudes(ham.space(), amps).unwrap();
        psi.normalize();
        let opts = EvolveOptions { tolerance: 1e-3, ..Default::default() };
        lhz_kpo::evolve::evolve_hamiltonian(&ham, psi, &opts).unwrap().state.into_amplitudes()
    };
    let reference = run(0.0025);
    let dist = |a: &[Complex<f64>]| {
        let ov: Complex<f64> = a.iter().zip(&reference).map(|(x, y)| x.conj() * y).sum();
        let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        let nb: f64 = reference.iter().map(|x| x.norm_sqr()).sum();
        (na + nb - 2.0 * ov.norm()).max(0.0).sqrt()
    };
    let errs: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| dist(&run(dt))).collect();
    let slopes: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("refinement slopes {slopes:?}");
    checks.push(("RK4 refinement slope ≥ 3.5", slopes.iter().all(|&s| s >= 3.5)));

    // Three-spin end-to-end run at ten levels.
    let inst = nondegenerate_instances(1).remove(0);
    let lhz = build_lhz(&inst).unwrap();
    let params = SimParams { levels: 10, ..SimParams::default() };
    let report_ = evolve::<f64, _>(&params, &lhz, &EvolveOptions::default()).unwrap();
    let dist3 = spin_distribution(&report_.state, &lhz).unwrap();
    let full = full_distribution(&report_.state).unwrap();
    let m = lhz_kpo::readout::metrics(&dist3, &lhz.ising()).unwrap();
    println!("end-to-end P_s = {:.4}, drift = {:.2e}", m.success, report_.norm_drift);
    checks.push(("probabilities normalized to 1e-8", (dist3.total() - 1.0).abs() < 1e-8 && (full.iter().sum::<f64>() - 1.0).abs() < 1e-8));
    checks.push(("norm drift < 1e-6", report_.norm_drift < 1e-6));
    checks.push(("end-to-end P_s ≥ 0.9", m.success >= 0.9));
    checks.push(("end-to-end under 5 minutes", start.elapsed() < Duration::from_secs(300)));
    report("A6", &checks);
}
