//! Property tests for state-space, readout and classical invariants.

use lhz_kpo::experiments::gen_random_instance;
use lhz_kpo::fock::{reduce, sign_projectors, FockSpace, StateVector};
use lhz_kpo::lhz::{brute_force_ising, build_lhz, c_lower_bound, LhzLayout, Spins};
use lhz_kpo::readout::full_distribution;
use lhz_kpo::Exact;
use num_complex::Complex;
use proptest::prelude::*;

fn state(modes: usize, levels: usize) -> impl Strategy<Value = StateVector<f64>> {
    let dim = levels.pow(modes as u32);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_map(move |v| {
        let amps = v.into_iter().map(|(re, im)| Complex::new(re, im)).collect();
        let mut psi = StateVector::from_amplitudes(FockSpace::new(modes, levels).unwrap(), amps).unwrap();
        psi.normalize();
        psi
    })
}

/// `ρ` by direct summation over every pair of basis states.
fn reduce_oracle(psi: &StateVector<f64>, keep: &[usize]) -> Vec<Vec<Complex<f64>>> {
    let space = psi.space();
    let d = space.levels();
    let rows = d.pow(keep.len() as u32);
    let mut rho = vec![vec![Complex::new(0.0, 0.0); rows]; rows];
    let amps = psi.amplitudes();
    for a in 0..space.dim() {
        for b in 0..space.dim() {
            let (da, db) = (space.digits(a), space.digits(b));
            let traced_equal = (0..space.modes()).filter(|k| !keep.contains(k)).all(|k| da[k] == db[k]);
            if traced_equal {
                let r = keep.iter().fold(0, |acc, &k| acc * d + da[k]);
                let c = keep.iter().fold(0, |acc, &k| acc * d + db[k]);
                rho[r][c] += amps[a] * amps[b].conj();
            }
        }
    }
    rho
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_matches_direct_sum(psi in state(3, 3), keep in prop::sample::subsequence(vec![0usize, 1, 2], 1..=3).prop_shuffle()) {
        let rho = reduce(&psi, &keep).unwrap();
        let oracle = reduce_oracle(&psi, &keep);
        for (i, row) in oracle.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((rho.get(i, j) - v).norm() < 1e-13);
            }
        }
        prop_assert!(rho.hermiticity_error() < 1e-15);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kept_mode_order_only_permutes(psi in state(3, 3)) {
        let a = reduce(&psi, &[0, 2]).unwrap();
        let b = reduce(&psi, &[2, 0]).unwrap();
        let swap = |i: usize| (i % 3) * 3 + i / 3;
        for i in 0..9 {
            for j in 0..9 {
                prop_assert!((a.get(i, j) - b.get(swap(i), swap(j))).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sign_probabilities_are_a_distribution(psi in state(3, 4)) {
        let p = full_distribution(&psi).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!(p.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn sign_pattern_probabilities_are_expectations(psi in state(2, 3)) {
        // Tr[ρ (M_s ⊗ M_t)] from the full density matrix.
        let proj = sign_projectors::<f64>(3);
        let rho = reduce(&psi, &[0, 1]).unwrap();
        let probs = rho.sign_pattern_probabilities(&proj);
        for bits in 0..4usize {
            let (m0, m1) = (proj.for_sign(if bits & 1 == 1 { -1 } else { 1 }), proj.for_sign(if bits & 2 == 2 { -1 } else { 1 }));
            let mut expect = Complex::new(0.0, 0.0);
            for r in 0..9 {
                for c in 0..9 {
                    let m = m0[(r / 3) * 3 + c / 3] * m1[(r % 3) * 3 + c % 3];
                    expect += rho.get(c, r) * m;
                }
            }
            prop_assert!((probs[bits] - expect.re).abs() < 1e-13);
        }
    }

    #[test]
    fn decode_inverts_encode(spins in 2usize..7, bits in any::<u64>()) {
        let layout = LhzLayout::new(spins).unwrap();
        let mut ising = Spins::from_bits(bits, spins);
        if ising.get(0) < 0 {
            ising = ising.flipped();
        }
        let encoded = layout.encode(&ising);
        prop_assert_eq!(layout.broken(&encoded), 0);
        let readout = Spins::new(encoded.as_slice()[..spins - 1].to_vec()).unwrap();
        prop_assert_eq!(layout.decode(&readout), ising);
    }
}

#[test]
fn projectors_resolve_the_identity() {
    for d in 2..=13 {
        let p = sign_projectors::<f64>(d);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.plus()[i * d + j] + p.minus()[i * d + j] - want).abs() < 1e-14);
            }
        }
    }
}

/// Brute force over every LHZ configuration with exact arithmetic.
fn lhz_minimizers_all_satisfy(lhz: &lhz_kpo::LhzInstanceExact, c: &Exact) -> bool {
    let l = lhz.modes();
    let configs: Vec<Spins> = (0..1u64 << l).map(|b| Spins::from_bits(b, l)).collect();
    let energies: Vec<Exact> = configs.iter().map(|s| lhz.energy(s, c)).collect();
    let min = energies.iter().min().unwrap();
    configs.iter().zip(&energies).filter(|(_, e)| *e == min).all(|(s, _)| lhz.layout().broken(s) == 0)
}

#[test]
fn c_lower_bound_is_tight_on_random_instances() {
    let eps = Exact::new(1, 1000);
    for seed in 0..50 {
        let inst = gen_random_instance::<Exact>(4, seed).unwrap();
        let lhz = build_lhz(&inst).unwrap();
        let bound = c_lower_bound(&lhz).unwrap();
        assert!(lhz_minimizers_all_satisfy(&lhz, &(bound + eps)), "seed {seed} above {bound}");
        if bound > eps {
            assert!(!lhz_minimizers_all_satisfy(&lhz, &(bound - eps)), "seed {seed} below {bound}");
        }
        // Above the bound the constrained minimizers decode to Ising ground states.
        let ground = brute_force_ising(&lhz.ising()).unwrap();
        let l = lhz.modes();
        let c = bound + eps;
        let best = (0..1u64 << l).map(|b| Spins::from_bits(b, l)).min_by_key(|s| lhz.energy(s, &c)).unwrap();
        let readout = Spins::new(best.as_slice()[..3].to_vec()).unwrap();
        assert!(ground.contains(&lhz.layout().decode(&readout)));
    }
}

#[test]
fn uniform_antiferromagnet_bound_is_one_sixth() {
    let inst = lhz_kpo::IsingInstance::uniform(4, Exact::from_integer(-1)).unwrap();
    assert_eq!(c_lower_bound(&build_lhz(&inst).unwrap()).unwrap(), Exact::new(1, 6));
}
