//! Coherent-state mean-field analysis.
//!
//! With the product trial state `|α_1⟩ ⋯ |α_L⟩` and real amplitudes, `⟨H⟩` is
//!
//! ```text
//! E(α) = Σ_k [K/2 α_k⁴ − (p − Δ_k) α_k² − 2ξ A J_k α_k] − 2ξC Σ_P β^legs Π_{m∈P} α_m
//! ```
//!
//! and its stationary points solve
//! `f_k = K α_k³ − (p − Δ_k) α_k − ξ (A J_k + C Σ_{P∋k} β^legs Π_{m∈P, m≠k} α_m) = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{schedule, ScheduleSample, SimParams};
use crate::lhz::{LhzInstance, Plaquette, Spins};
use crate::scalar::Coupling;

pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITERATIONS: usize = 100;
const DAMPED_ITERATIONS: usize = 3;
const DAMPING: f64 = 0.5;

/// Largest register for which every branch is enumerated.
pub const MAX_BRANCH_MODES: usize = 16;

/// Mean-field problem at one point of the schedule.
#[derive(Clone, Debug)]
pub struct MeanField {
    kerr: f64,
    xi: f64,
    c: f64,
    sample: ScheduleSample,
    couplings: Vec<f64>,
    z: Vec<usize>,
    plaquettes: Vec<Plaquette>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalSolution {
    pub alpha: Vec<f64>,
    pub residual: f64,
    pub branch: Spins,
    pub iterations: usize,
    pub energy: f64,
}

impl VariationalSolution {
    pub fn photons(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a * a).collect()
    }

    /// Signs of the amplitudes (zero counts as `+1`).
    pub fn realized_branch(&self) -> Spins {
        Spins::new(self.alpha.iter().map(|&a| if a < 0.0 { -1 } else { 1 }).collect()).expect("±1")
    }
}

impl MeanField {
    /// Mean-field problem at time `t` of the schedule.
    pub fn new<S: Coupling>(params: &SimParams, lhz: &LhzInstance<S>, t: f64) -> Result<Self> {
        params.validate()?;
        let sample = schedule(params, lhz.z(), t)?;
        let couplings = lhz
            .couplings()
            .iter()
            .map(|j| j.to_f64().ok_or_else(|| Error::InvalidInstance("coupling not representable as f64".into())))
            .collect::<Result<_>>()?;
        Ok(MeanField {
            kerr: params.kerr,
            xi: params.xi,
            c: params.c,
            sample,
            couplings,
            z: lhz.z().to_vec(),
            plaquettes: lhz.plaquettes().to_vec(),
        })
    }

    /// At the end of the schedule.
    pub fn at_end<S: Coupling>(params: &SimParams, lhz: &LhzInstance<S>) -> Result<Self> {
        Self::new(params, lhz, params.t_final)
    }

    pub fn modes(&self) -> usize {
        self.couplings.len()
    }

    pub fn sample(&self) -> &ScheduleSample {
        &self.sample
    }

    fn gain(&self, k: usize) -> f64 {
        self.sample.pump - self.sample.detunings[k]
    }

    /// `α_{0k} = sqrt((p − Δ_k)/K)`.
    pub fn alpha0k(&self) -> Vec<f64> {
        (0..self.modes()).map(|k| (self.gain(k) / self.kerr).max(0.0).sqrt()).collect()
    }

    /// `α_0 = sqrt((p − Δ̄)/K)`.
    pub fn alpha0(&self) -> f64 {
        let mean = self.sample.detunings.iter().sum::<f64>() / self.modes() as f64;
        ((self.sample.pump - mean) / self.kerr).max(0.0).sqrt()
    }

    fn ancilla(&self, p: &Plaquette) -> f64 {
        self.sample.beta.powi(p.ancilla_legs as i32)
    }

    pub fn energy(&self, alpha: &[f64]) -> f64 {
        let local: f64 = (0..self.modes())
            .map(|k| {
                let a = alpha[k];
                0.5 * self.kerr * a.powi(4) - self.gain(k) * a * a
                    - 2.0 * self.xi * self.sample.drive * self.couplings[k] * a
            })
            .sum();
        let plaq: f64 = self
            .plaquettes
            .iter()
            .map(|p| self.ancilla(p) * p.modes.iter().map(|&m| alpha[m]).product::<f64>())
            .sum();
        local - 2.0 * self.xi * self.c * plaq
    }

    pub fn residual_vector(&self, alpha: &[f64]) -> Vec<f64> {
        let mut f: Vec<f64> = (0..self.modes())
            .map(|k| {
                let a = alpha[k];
                self.kerr * a.powi(3) - self.gain(k) * a - self.xi * self.sample.drive * self.couplings[k]
            })
            .collect();
        for p in &self.plaquettes {
            let w = self.xi * self.c * self.ancilla(p);
            for &k in &p.modes {
                let others: f64 = p.modes.iter().filter(|&&m| m != k).map(|&m| alpha[m]).product();
                f[k] -= w * others;
            }
        }
        f
    }

    pub fn residual(&self, alpha: &[f64]) -> f64 {
        self.residual_vector(alpha).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn jacobian(&self, alpha: &[f64]) -> DMatrix<f64> {
        let l = self.modes();
        let mut jac = DMatrix::zeros(l, l);
        for k in 0..l {
            jac[(k, k)] = 3.0 * self.kerr * alpha[k] * alpha[k] - self.gain(k);
        }
        for p in &self.plaquettes {
            let w = self.xi * self.c * self.ancilla(p);
            for &k in &p.modes {
                for &l2 in p.modes.iter().filter(|&&m| m != k) {
                    let rest: f64 = p.modes.iter().filter(|&&m| m != k && m != l2).map(|&m| alpha[m]).product();
                    jac[(k, l2)] -= w * rest;
                }
            }
        }
        jac
    }

    /// Newton iteration from `seed`.
    pub fn newton(&self, seed: Vec<f64>) -> Result<(Vec<f64>, usize)> {
        let mut alpha = seed;
        for it in 0..NEWTON_MAX_ITERATIONS {
            let f = self.residual_vector(&alpha);
            let res = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if res < NEWTON_TOLERANCE {
                return Ok((alpha, it));
            }
            if !res.is_finite() {
                return Err(Error::NoConvergence { iterations: it, residual: res });
            }
            let step = self
                .jacobian(&alpha)
                .lu()
                .solve(&DVector::from_vec(f))
                .ok_or(Error::NoConvergence { iterations: it, residual: res })?;
            let damping = if it < DAMPED_ITERATIONS { DAMPING } else { 1.0 };
            for (a, s) in alpha.iter_mut().zip(step.iter()) {
                *a -= damping * s;
            }
        }
        Err(Error::NoConvergence { iterations: NEWTON_MAX_ITERATIONS, residual: self.residual(&alpha) })
    }

    fn require_bifurcated(&self) -> Result<()> {
        if let Some(k) = (0..self.modes()).find(|&k| self.gain(k) <= 0.0) {
            return Err(Error::InvalidParams(format!(
                "mode {k} has not bifurcated: p = {} ≤ Δ_k = {}",
                self.sample.pump, self.sample.detunings[k]
            )));
        }
        Ok(())
    }

    /// Stationary point on `branch`, seeded at `α_{0k} s̃_k`.
    pub fn solve(&self, branch: &Spins) -> Result<VariationalSolution> {
        if branch.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), got: branch.len() });
        }
        self.require_bifurcated()?;
        let seed = self.alpha0k().iter().zip(branch.as_slice()).map(|(a, &s)| a * s as f64).collect();
        let (alpha, iterations) = self.newton(seed)?;
        Ok(VariationalSolution {
            residual: self.residual(&alpha),
            energy: self.energy(&alpha),
            alpha,
            branch: branch.clone(),
            iterations,
        })
    }

    /// Every branch's solution, lowest energy first. Branches whose Newton
    /// iteration fails are skipped.
    pub fn branches(&self) -> Result<Vec<VariationalSolution>> {
        if self.modes() > MAX_BRANCH_MODES {
            return Err(Error::TooLarge { what: "branch enumeration", size: self.modes(), limit: MAX_BRANCH_MODES });
        }
        self.require_bifurcated()?;
        let mut out = Vec::new();
        for bits in 0..1u64 << self.modes() {
            match self.solve(&Spins::from_bits(bits, self.modes())) {
                Ok(sol) => out.push(sol),
                Err(Error::NoConvergence { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(out)
    }

    pub fn ground_branch(&self) -> Result<VariationalSolution> {
        self.branches()?
            .into_iter()
            .next()
            .ok_or(Error::NoConvergence { iterations: NEWTON_MAX_ITERATIONS, residual: f64::INFINITY })
    }

    /// `Σ_{P∋k} Π_{m∈P, m≠k} s̃_m`, ancilla legs counting `+1`.
    pub fn plaquette_sign_sums(&self, branch: &Spins) -> Vec<f64> {
        let mut sums = vec![0.0; self.modes()];
        for p in &self.plaquettes {
            for &k in &p.modes {
                sums[k] += p.modes.iter().filter(|&&m| m != k).map(|&m| branch.get(m) as f64).product::<f64>();
            }
        }
        sums
    }

    fn first_order(&self, branch: &Spins, plaquette_term: &[f64]) -> Vec<f64> {
        let a0 = self.alpha0();
        let scale = self.xi / (2.0 * a0 * a0 * self.kerr);
        self.alpha0k()
            .iter()
            .enumerate()
            .map(|(k, a0k)| {
                a0k * branch.get(k) as f64
                    + scale * (self.sample.drive * self.couplings[k] + a0.powi(3) * self.c * plaquette_term[k])
            })
            .collect()
    }

    /// First-order amplitudes with the explicit plaquette sign sums.
    pub fn first_order_amplitudes(&self, branch: &Spins) -> Vec<f64> {
        self.first_order(branch, &self.plaquette_sign_sums(branch))
    }

    /// First-order amplitudes assuming every constraint holds, so the sign
    /// sums collapse to `z_k s̃_k`.
    pub fn first_order_amplitudes_constrained(&self, branch: &Spins) -> Vec<f64> {
        let term: Vec<f64> = (0..self.modes()).map(|k| self.z[k] as f64 * branch.get(k) as f64).collect();
        self.first_order(branch, &term)
    }

    /// First-order photon numbers
    /// `(p − Δ_k)/K + (ξ/K)(A J_k s̃_k / α_0 + α_0² C z_k)`.
    pub fn photon_prediction(&self, branch: &Spins) -> Vec<f64> {
        let a0 = self.alpha0();
        (0..self.modes())
            .map(|k| {
                self.gain(k) / self.kerr
                    + self.xi / self.kerr
                        * (self.sample.drive * self.couplings[k] * branch.get(k) as f64 / a0
                            + a0 * a0 * self.c * self.z[k] as f64)
            })
            .collect()
    }

    /// `E(α)` for complex amplitudes; the plaquette term is `Π α*_creators Π α_annihilators + c.c.`.
    pub fn complex_energy(&self, alpha: &[Complex<f64>]) -> f64 {
        let local: f64 = (0..self.modes())
            .map(|k| {
                let a = alpha[k];
                let n = a.norm_sqr();
                0.5 * self.kerr * n * n - self.sample.pump * (a * a).re + self.sample.detunings[k] * n
                    - 2.0 * self.xi * self.sample.drive * self.couplings[k] * a.re
            })
            .sum();
        let plaq: f64 = self.plaquettes.iter().map(|p| self.ancilla(p) * 2.0 * plaquette_product(p, alpha, None).re).sum();
        local - self.xi * self.c * plaq
    }

    /// `∂E/∂α*_k` for complex amplitudes.
    pub fn complex_residual(&self, alpha: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let mut g: Vec<Complex<f64>> = (0..self.modes())
            .map(|k| {
                let a = alpha[k];
                a.conj() * a * a * self.kerr - a.conj() * self.sample.pump + a * self.sample.detunings[k]
                    - self.xi * self.sample.drive * self.couplings[k]
            })
            .collect();
        for p in &self.plaquettes {
            let w = self.xi * self.c * self.ancilla(p);
            for &k in &p.modes {
                let d = if p.creators().contains(&k) {
                    plaquette_product(p, alpha, Some(k))
                } else {
                    plaquette_product(p, alpha, Some(k)).conj()
                };
                g[k] -= d * w;
            }
        }
        g
    }

    /// Newton on the `2L` real equations `∂E/∂α* = 0`, starting from a complex
    /// seed. The Jacobian is a central difference; the residual is exact.
    pub fn newton_complex(&self, seed: Vec<Complex<f64>>) -> Result<(Vec<Complex<f64>>, usize)> {
        let l = self.modes();
        let split = |g: &[Complex<f64>]| -> DVector<f64> {
            DVector::from_iterator(2 * l, g.iter().map(|z| z.re).chain(g.iter().map(|z| z.im)))
        };
        let mut alpha = seed;
        for it in 0..NEWTON_MAX_ITERATIONS {
            let f = split(&self.complex_residual(&alpha));
            let res = f.amax();
            if res < NEWTON_TOLERANCE {
                return Ok((alpha, it));
            }
            let h = 1e-7;
            let mut jac = DMatrix::zeros(2 * l, 2 * l);
            for col in 0..2 * l {
                let dir = if col < l { Complex::new(h, 0.0) } else { Complex::new(0.0, h) };
                let mut plus = alpha.clone();
                let mut minus = alpha.clone();
                plus[col % l] += dir;
                minus[col % l] -= dir;
                let diff = (split(&self.complex_residual(&plus)) - split(&self.complex_residual(&minus))) / (2.0 * h);
                jac.set_column(col, &diff);
            }
            let step = jac.lu().solve(&f).ok_or(Error::NoConvergence { iterations: it, residual: res })?;
            let damping = if it < DAMPED_ITERATIONS { DAMPING } else { 1.0 };
            for k in 0..l {
                alpha[k] -= Complex::new(step[k], step[k + l]) * damping;
            }
        }
        let res = split(&self.complex_residual(&alpha)).amax();
        Err(Error::NoConvergence { iterations: NEWTON_MAX_ITERATIONS, residual: res })
    }
}

/// `Π α*_creators Π α_annihilators`, omitting mode `skip`.
fn plaquette_product(p: &Plaquette, alpha: &[Complex<f64>], skip: Option<usize>) -> Complex<f64> {
    let mut prod = Complex::new(1.0, 0.0);
    for &m in p.creators().iter().filter(|&&m| Some(m) != skip) {
        prod *= alpha[m].conj();
    }
    for &m in p.annihilators().iter().filter(|&&m| Some(m) != skip) {
        prod *= alpha[m];
    }
    prod
}

/// Solve the mean-field equations at the end of the schedule on `branch`.
pub fn solve_meanfield<S: Coupling>(params: &SimParams, lhz: &LhzInstance<S>, branch: &Spins) -> Result<VariationalSolution> {
    MeanField::at_end(params, lhz)?.solve(branch)
}

/// First-order photon numbers at the end of the schedule.
pub fn photon_prediction<S: Coupling>(params: &SimParams, lhz: &LhzInstance<S>, branch: &Spins) -> Result<Vec<f64>> {
    let mf = MeanField::at_end(params, lhz)?;
    mf.require_bifurcated()?;
    Ok(mf.photon_prediction(branch))
}

/// Photon number with the correction, to first order: `(p_f − Δ)/K` on every mode.
pub fn corrected_photon_number(params: &SimParams) -> f64 {
    (params.pump_final - params.detuning) / params.kerr
}

/// Whether the vacuum is the mean-field ground state at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacuumStability {
    /// `ξC/K`.
    pub ratio: f64,
    pub stable: bool,
    /// With `m` equal photon numbers `x` on a four-mode plaquette the bracket
    /// `Π(K x + Δ) − (ξC)^4 Π x` becomes `(K x + Δ)^4 − (ξC x)^4`. When the
    /// ratio exceeds one, it is negative at `witness`.
    pub witness: Option<f64>,
    pub bracket_at_witness: Option<f64>,
}

/// `Π_k(K x_k + Δ) − (ξC)^m Π_k x_k` over the photon numbers `x` of one plaquette.
pub fn stability_bracket(params: &SimParams, photons: &[f64]) -> f64 {
    let lhs: f64 = photons.iter().map(|x| params.kerr * x + params.detuning).product();
    let rhs: f64 = (params.xi * params.c).powi(photons.len() as i32) * photons.iter().product::<f64>();
    lhs - rhs
}

pub fn vacuum_stable(params: &SimParams) -> VacuumStability {
    let xc = params.xi * params.c;
    let ratio = xc / params.kerr;
    let stable = ratio <= 1.0;
    // (K x + Δ) < ξC x once x > Δ / (ξC − K); double it for a strict witness.
    let witness = (!stable).then(|| 2.0 * params.detuning / (xc - params.kerr));
    let bracket_at_witness = witness.map(|x| stability_bracket(params, &[x; 4]));
    VacuumStability { ratio, stable, witness, bracket_at_witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhz::{build_lhz, IsingInstance};

    fn af4() -> LhzInstance<f64> {
        build_lhz(&IsingInstance::uniform(4, -1.0).unwrap()).unwrap()
    }

    fn encoded(lhz: &LhzInstance<f64>, s: &str) -> Spins {
        lhz.layout().encode(&s.parse().unwrap())
    }

    #[test]
    fn uncoupled_solution_is_the_seed() {
        let lhz = af4();
        let params = SimParams { xi: 0.0, ..Default::default() };
        let branch = encoded(&lhz, "++--");
        let sol = solve_meanfield(&params, &lhz, &branch).unwrap();
        for (a, s) in sol.alpha.iter().zip(branch.as_slice()) {
            assert_eq!(*a, 3f64.sqrt() * *s as f64);
        }
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn newton_converges_tightly() {
        let lhz = af4();
        for correction in [false, true] {
            let params = SimParams::default().with_correction(correction);
            let mf = MeanField::at_end(&params, &lhz).unwrap();
            let sol = mf.solve(&encoded(&lhz, "+-+-")).unwrap();
            assert!(sol.residual < 1e-12);
            assert_eq!(sol.realized_branch(), sol.branch);
        }
    }

    #[test]
    fn first_order_close_to_newton() {
        let lhz = af4();
        let params = SimParams::default();
        let mf = MeanField::at_end(&params, &lhz).unwrap();
        let branch = encoded(&lhz, "++--");
        let sol = mf.solve(&branch).unwrap();
        let approx = mf.first_order_amplitudes_constrained(&branch);
        let diff = sol.alpha.iter().zip(&approx).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 0.05, "{diff}");
    }

    #[test]
    fn sign_sums_collapse_on_valid_branches() {
        let lhz = af4();
        let mf = MeanField::at_end(&SimParams::default(), &lhz).unwrap();
        for bits in 0..8u64 {
            let ising = Spins::from_bits(bits << 1, 4);
            let branch = lhz.layout().encode(&ising);
            let sums = mf.plaquette_sign_sums(&branch);
            for k in 0..6 {
                assert_eq!(sums[k], lhz.z()[k] as f64 * branch.get(k) as f64);
            }
            assert_eq!(mf.first_order_amplitudes(&branch), mf.first_order_amplitudes_constrained(&branch));
        }
    }

    #[test]
    fn corrected_prediction_is_nearly_uniform() {
        let lhz = af4();
        let params = SimParams::default().with_correction(true);
        let branch = encoded(&lhz, "++--");
        let mf = MeanField::at_end(&params, &lhz).unwrap();
        let n = mf.photon_prediction(&branch);
        // What remains is the drive term and the second-order shift of α_0.
        let xc = params.xi * params.c;
        let a0_sq = mf.alpha0().powi(2);
        for k in 0..6 {
            let drive = params.xi * mf.sample().drive * lhz.couplings()[k] * branch.get(k) as f64 / mf.alpha0();
            let second = xc * lhz.z()[k] as f64 * (a0_sq - 3.0);
            assert!((n[k] - drive - second - 3.0).abs() < 1e-12);
            assert!((n[k] - 3.0).abs() < 0.3);
        }
        assert_eq!(corrected_photon_number(&params), 3.0);
    }

    #[test]
    fn uncorrected_prediction_follows_z() {
        let lhz = af4();
        let n = photon_prediction(&SimParams::default(), &lhz, &encoded(&lhz, "++--")).unwrap();
        // z = [1, 3, 1, 2, 2, 1]
        assert!(n[1] > n[3] && n[1] > n[4]);
        assert!(n[3].min(n[4]) > n[0].max(n[2]).max(n[5]));
    }

    #[test]
    fn uncoupled_prediction_is_gain() {
        let lhz = af4();
        let params = SimParams { xi: 0.0, ..Default::default() };
        assert_eq!(photon_prediction(&params, &lhz, &Spins::all_up(6)).unwrap(), vec![3.0; 6]);
    }

    #[test]
    fn ground_branch_is_a_valid_encoding() {
        let lhz = af4();
        let mf = MeanField::at_end(&SimParams::default(), &lhz).unwrap();
        let ground = mf.ground_branch().unwrap();
        assert_eq!(lhz.layout().broken(&ground.branch), 0);
        let decoded = lhz.layout().decode(&Spins::new(ground.branch.as_slice()[..3].to_vec()).unwrap());
        assert!(["++--", "+-+-", "+--+"].contains(&decoded.to_string().as_str()));
    }

    #[test]
    fn imaginary_perturbations_relax_to_the_real_solution() {
        let lhz = af4();
        let mf = MeanField::at_end(&SimParams::default(), &lhz).unwrap();
        let real = mf.solve(&encoded(&lhz, "++--")).unwrap();
        let seed: Vec<_> = real
            .alpha
            .iter()
            .enumerate()
            .map(|(k, &a)| Complex::new(a, 1e-3 * ((k as f64) - 2.5)))
            .collect();
        let (alpha, _) = mf.newton_complex(seed).unwrap();
        for (z, a) in alpha.iter().zip(&real.alpha) {
            assert!(z.im.abs() < 1e-9 && (z.re - a).abs() < 1e-9);
        }
        let as_complex: Vec<_> = real.alpha.iter().map(|&a| Complex::new(a, 0.0)).collect();
        assert!((mf.complex_energy(&as_complex) - real.energy).abs() < 1e-12);
    }

    #[test]
    fn unbifurcated_parameters_are_rejected() {
        let lhz = af4();
        let params = SimParams { pump_final: 0.5, ..Default::default() };
        assert!(matches!(solve_meanfield(&params, &lhz, &Spins::all_up(6)), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn vacuum_stability_boundary() {
        let at = |xi: f64, c: f64| vacuum_stable(&SimParams { xi, c, ..Default::default() });
        let edge = at(1.0, 1.0);
        assert!(edge.stable && edge.witness.is_none());
        assert!(at(0.6, 0.3).stable);
        let loud = at(2.0, 0.6);
        assert!(!loud.stable);
        assert!(loud.bracket_at_witness.unwrap() < 0.0);
    }

    #[test]
    fn bracket_positive_below_boundary() {
        let params = SimParams { xi: 1.0, c: 1.0, ..Default::default() };
        for x in [0.0, 0.1, 1.0, 10.0, 1e3] {
            assert!(stability_bracket(&params, &[x, 2.0 * x, x, 0.5 * x]) > 0.0);
        }
    }
}
