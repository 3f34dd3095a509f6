//! Experiment drivers: random instances, the uniform antiferromagnet study,
//! batches of random instances with and without the detuning correction, and
//! `(C, ξ)` sweeps. Results are written as CSV under `results/`, per-run JSON
//! under `results/runs/`, instances under `instances/` and run metadata
//! (including timestamps) under `metadata/`, so the CSVs themselves are
//! reproducible byte for byte.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve, Checkpoint, EvolveOptions};
use crate::hamiltonian::SimParams;
use crate::io::{instance_hash, save_instance};
use crate::lhz::{build_lhz, IsingInstance, Spins};
use crate::readout::{improvement_rates, metrics, spin_distribution, ImprovementRate, Metrics};
use crate::scalar::Coupling;
use crate::variational::{corrected_photon_number, MeanField};

/// Generator behind [`gen_random_instance`], recorded in every output.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3), seeded with seed_from_u64";

/// Couplings are drawn from `{-1, -0.99, …, 1}`.
pub const COUPLING_GRID: i64 = 100;

/// Random instance with every `J_ij` uniform on the coupling grid. Draws with
/// all couplings zero are discarded and redrawn.
pub fn gen_random_instance<S: Coupling>(spins: usize, seed: u64) -> Result<IsingInstance<S>> {
    if spins < 2 {
        return Err(Error::InvalidInstance(format!("need at least 2 spins, got {spins}")));
    }
    let pairs: Vec<(usize, usize)> = (0..spins).flat_map(|i| (i + 1..spins).map(move |j| (i, j))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let draws: Vec<i64> = pairs.iter().map(|_| rng.gen_range(-COUPLING_GRID..=COUPLING_GRID)).collect();
        if draws.iter().any(|&k| k != 0) {
            let couplings = pairs.iter().zip(draws).map(|(&p, k)| (p, S::from_ratio(k, COUPLING_GRID)));
            return IsingInstance::new(spins, couplings);
        }
    }
}

/// Seed of instance `index` in a batch started from `seed`.
pub fn batch_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub c: f64,
    pub xi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    UniformAf,
    RandomBatch,
    Sweep,
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Four spins, 13 Fock levels, 20 instances.
    Full,
    /// Three spins, 10 Fock levels: minutes on one core.
    Ci,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub spins: usize,
    pub instances: usize,
    pub seed: u64,
    pub base: SimParams,
    /// Operating point of the uncorrected runs.
    pub without: CouplingPoint,
    /// Operating point of the corrected runs.
    pub with: CouplingPoint,
    pub c_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(ExperimentKind::RandomBatch, Preset::Full)
    }
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind, preset: Preset) -> Self {
        let (spins, levels) = match preset {
            Preset::Full => (4, 13),
            Preset::Ci => (3, 10),
        };
        let (without, with) = match kind {
            ExperimentKind::UniformAf => (CouplingPoint { c: 0.3, xi: 0.3 }, CouplingPoint { c: 0.3, xi: 0.3 }),
            _ => (CouplingPoint { c: 0.3, xi: 0.3 }, CouplingPoint { c: 0.4, xi: 0.6 }),
        };
        ExperimentConfig {
            kind,
            spins,
            instances: 20,
            seed: 1,
            base: SimParams { levels, auto_dt: true, ..SimParams::default() },
            without,
            with,
            c_grid: (1..=6).map(|i| i as f64 / 10.0).collect(),
            xi_grid: (1..=8).map(|i| i as f64 / 10.0).collect(),
            workers: 1,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.spins < 2 {
            return bad(format!("need at least 2 spins, got {}", self.spins));
        }
        if self.workers == 0 {
            return bad("need at least one worker".into());
        }
        let grid = self.c_grid.iter().chain(&self.xi_grid);
        let points = [self.without.c, self.without.xi, self.with.c, self.with.xi];
        if grid.chain(&points).any(|&x| !(x > 0.0 && x.is_finite())) {
            return bad("coupling values must be positive".into());
        }
        self.base.validate_bifurcating()
    }

    /// Base parameters at an operating point.
    pub fn params_at(&self, point: CouplingPoint, correction: bool) -> SimParams {
        self.base.clone().with_coupling(point.c, point.xi).with_correction(correction)
    }
}

/// Probability of one readout pattern and the Ising configuration it decodes to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternProbability {
    pub readout: String,
    pub ising: String,
    pub probability: f64,
}

/// Everything recorded about one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub instance_hash: String,
    pub normalization: f64,
    pub ordering: String,
    pub params: SimParams,
    pub photons: Vec<f64>,
    pub distribution: Vec<PatternProbability>,
    pub metrics: Metrics,
    pub norm_drift: f64,
    pub max_tail: f64,
    pub steps: usize,
    pub dt: f64,
    #[serde(skip)]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunResult {
    pub fn ising_probability(&self, config: &str) -> f64 {
        self.distribution.iter().filter(|p| p.ising == config).map(|p| p.probability).sum()
    }
}

/// Evolve, read out and score one instance.
pub fn run_instance(params: &SimParams, instance: &IsingInstance<f64>, opts: &EvolveOptions) -> Result<RunResult> {
    params.validate_bifurcating()?;
    let lhz = build_lhz(instance)?;
    let report = evolve::<f64, _>(params, &lhz, opts)?;
    let dist = spin_distribution(&report.state, &lhz)?;
    let m = metrics(&dist, &lhz.ising())?;
    let distribution = dist
        .ising_configs()
        .into_iter()
        .enumerate()
        .map(|(bits, (ising, probability))| PatternProbability {
            readout: dist.pattern(bits).to_string(),
            ising: ising.to_string(),
            probability,
        })
        .collect();
    Ok(RunResult {
        instance_hash: instance_hash(instance),
        normalization: *lhz.normalization(),
        ordering: "mode-major".into(),
        params: params.clone(),
        photons: dist.photons,
        distribution,
        metrics: m,
        norm_drift: report.norm_drift,
        max_tail: report.max_tail,
        steps: report.steps,
        dt: report.dt,
        checkpoints: report.checkpoints,
        wall_time: report.wall_time,
    })
}

#[derive(Clone, Debug)]
pub struct UniformAfReport {
    pub instance: IsingInstance<f64>,
    pub z: Vec<usize>,
    pub without: RunResult,
    pub with: RunResult,
    /// First-order photon numbers on the mean-field ground branch.
    pub predicted_without: Vec<f64>,
    pub predicted_with: Vec<f64>,
}

/// Uniform antiferromagnet with and without the correction at the same operating point.
pub fn run_uniform_af(config: &ExperimentConfig, opts: &EvolveOptions) -> Result<UniformAfReport> {
    config.validate()?;
    let instance = IsingInstance::uniform(config.spins, -1.0)?;
    let lhz = build_lhz(&instance)?;
    let params_without = config.params_at(config.without, false);
    let params_with = config.params_at(config.with, true);
    let predict = |p: &SimParams| -> Result<Vec<f64>> {
        let mf = MeanField::at_end(p, &lhz)?;
        Ok(mf.photon_prediction(&mf.ground_branch()?.branch))
    };
    let report = UniformAfReport {
        z: lhz.z().to_vec(),
        predicted_without: predict(&params_without)?,
        predicted_with: predict(&params_with)?,
        without: run_instance(&params_without, &instance, opts)?,
        with: run_instance(&params_with, &instance, opts)?,
        instance,
    };
    if let Some(dir) = &config.output_dir {
        write_uniform_af(dir, config, &report)?;
    }
    Ok(report)
}

/// One instance of a batch. Metrics are absent when a run failed.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchEntry {
    pub index: usize,
    pub seed: u64,
    pub instance: IsingInstance<f64>,
    pub without: Result<RunResult, String>,
    pub with: Result<RunResult, String>,
}

impl BatchEntry {
    pub fn metrics(&self) -> Option<(Metrics, Metrics)> {
        Some((self.without.as_ref().ok()?.metrics, self.with.as_ref().ok()?.metrics))
    }

    pub fn rates(&self) -> Option<(ImprovementRate, ImprovementRate)> {
        self.metrics().map(|(a, b)| improvement_rates(&a, &b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchAggregates {
    pub completed: usize,
    pub failed: usize,
    pub mean_success_without: f64,
    pub mean_success_with: f64,
    pub mean_residual_without: f64,
    pub mean_residual_with: f64,
    /// Fraction of completed instances whose failure probability improved.
    pub improved_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub entries: Vec<BatchEntry>,
    /// `None` when no instance completed.
    pub aggregates: Option<BatchAggregates>,
}

pub fn aggregate(entries: &[BatchEntry]) -> Option<BatchAggregates> {
    type Done = ((Metrics, Metrics), (ImprovementRate, ImprovementRate));
    let done: Vec<Done> = entries.iter().filter_map(|e| Some((e.metrics()?, e.rates()?))).collect();
    if done.is_empty() {
        return None;
    }
    let n = done.len() as f64;
    let mean = |f: &dyn Fn(&Done) -> f64| {
        done.iter().map(f).sum::<f64>() / n
    };
    Some(BatchAggregates {
        completed: done.len(),
        failed: entries.len() - done.len(),
        mean_success_without: mean(&|d| d.0 .0.success),
        mean_success_with: mean(&|d| d.0 .1.success),
        mean_residual_without: mean(&|d| d.0 .0.residual_energy),
        mean_residual_with: mean(&|d| d.0 .1.residual_energy),
        improved_fraction: mean(&|d| if d.1 .0.improved() { 1.0 } else { 0.0 }),
    })
}

/// Runs `f` over `items` on `workers` threads; results keep the input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn batch_instances(config: &ExperimentConfig) -> Result<Vec<(u64, IsingInstance<f64>)>> {
    (0..config.instances)
        .map(|i| {
            let seed = batch_seed(config.seed, i);
            Ok((seed, gen_random_instance(config.spins, seed)?))
        })
        .collect()
}

/// Random instances, each run without the correction at `config.without` and
/// with it at `config.with`. Failed runs are recorded, not propagated.
pub fn run_batch(config: &ExperimentConfig, opts: &EvolveOptions) -> Result<BatchReport> {
    config.validate()?;
    let instances = batch_instances(config)?;
    let params_without = config.params_at(config.without, false);
    let params_with = config.params_at(config.with, true);
    let entries = parallel_map(&instances, config.workers, |index, (seed, instance)| {
        let run = |p: &SimParams| run_instance(p, instance, opts).map_err(|e| e.to_string());
        let entry = BatchEntry {
            index,
            seed: *seed,
            instance: instance.clone(),
            without: run(&params_without),
            with: run(&params_with),
        };
        if opts.progress {
            eprintln!("instance {index}: {:?}", entry.metrics());
        }
        entry
    });
    let report = BatchReport { aggregates: aggregate(&entries), entries };
    if let Some(dir) = &config.output_dir {
        write_batch(dir, config, &report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: f64,
    pub xi: f64,
    pub correction: bool,
    /// Hashes of the instances averaged over, `;`-separated.
    pub instance_hashes: String,
    /// The exact parameters as JSON.
    pub params: String,
    pub completed: usize,
    pub failed: usize,
    pub mean_success: Option<f64>,
    pub mean_residual: Option<f64>,
}

/// Mean metrics over the batch instances at every `(C, ξ)` grid point, with and without the correction.
pub fn run_sweep(config: &ExperimentConfig, opts: &EvolveOptions) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let instances = batch_instances(config)?;
    let mut jobs = Vec::new();
    for &c in &config.c_grid {
        for &xi in &config.xi_grid {
            for correction in [false, true] {
                for (_, inst) in &instances {
                    jobs.push((CouplingPoint { c, xi }, correction, inst));
                }
            }
        }
    }
    let results = parallel_map(&jobs, config.workers, |_, (point, correction, inst)| {
        run_instance(&config.params_at(*point, *correction), inst, opts).map(|r| r.metrics)
    });
    let rows: Vec<SweepRow> = jobs
        .chunks(instances.len().max(1))
        .zip(results.chunks(instances.len().max(1)))
        .map(|(job, res)| {
            let ok: Vec<&Metrics> = res.iter().filter_map(|r| r.as_ref().ok()).collect();
            let n = ok.len() as f64;
            SweepRow {
                c: job[0].0.c,
                xi: job[0].0.xi,
                correction: job[0].1,
                instance_hashes: job.iter().map(|j| instance_hash(j.2)).collect::<Vec<_>>().join(";"),
                params: serde_json::to_string(&config.params_at(job[0].0, job[0].1)).expect("params serialize"),
                completed: ok.len(),
                failed: res.len() - ok.len(),
                mean_success: (!ok.is_empty()).then(|| ok.iter().map(|m| m.success).sum::<f64>() / n),
                mean_residual: (!ok.is_empty()).then(|| ok.iter().map(|m| m.residual_energy).sum::<f64>() / n),
            }
        })
        .collect();
    if let Some(dir) = &config.output_dir {
        let results = ensure_dir(&dir.join("results"))?;
        write_csv(&results.join("sweep.csv"), &rows)?;
        write_metadata(dir, "sweep", config, &[])?;
    }
    Ok(rows)
}

/// Per-mode photon numbers: mean-field, first order, corrected first order and (optionally) simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalRow {
    pub mode: usize,
    pub pair: String,
    pub z: usize,
    pub coupling: f64,
    pub branch: i8,
    pub meanfield: f64,
    pub first_order: f64,
    pub corrected: f64,
    pub simulated: Option<f64>,
}

pub fn variational_report(
    params: &SimParams,
    instance: &IsingInstance<f64>,
    simulate: Option<&EvolveOptions>,
) -> Result<Vec<VariationalRow>> {
    params.validate_bifurcating()?;
    let lhz = build_lhz(instance)?;
    let mf = MeanField::at_end(params, &lhz)?;
    let ground = mf.ground_branch()?;
    let first = mf.photon_prediction(&ground.branch);
    let simulated = match simulate {
        Some(opts) => Some(run_instance(params, instance, opts)?.photons),
        None => None,
    };
    Ok((0..lhz.modes())
        .map(|k| {
            let (i, j) = lhz.layout().pair(k);
            VariationalRow {
                mode: k + 1,
                pair: format!("{}-{}", i + 1, j + 1),
                z: lhz.z()[k],
                coupling: lhz.couplings()[k],
                branch: ground.branch.get(k),
                meanfield: ground.alpha[k] * ground.alpha[k],
                first_order: first[k],
                corrected: corrected_photon_number(params),
                simulated: simulated.as_ref().map(|s| s[k]),
            }
        })
        .collect())
}

fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    write_csv_to(std::fs::File::create(path)?, rows)
}

pub fn write_csv_to<R: Serialize>(out: impl std::io::Write, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata lives apart from the CSVs so that results stay byte-identical across reruns.
fn write_metadata(dir: &Path, name: &str, config: &ExperimentConfig, extra: &[String]) -> Result<()> {
    let meta = ensure_dir(&dir.join("metadata"))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut text = format!(
        "experiment: {name}\ncreated_unix: {stamp}\nversion: {}\nrng: {RNG_ALGORITHM}\nordering: mode-major\nconfig: {}\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(config)?
    );
    for line in extra {
        text.push_str(line);
        text.push('\n');
    }
    std::fs::write(meta.join(format!("{name}.txt")), text)?;
    Ok(())
}

#[derive(Serialize)]
struct PhotonRow<'a> {
    mode: usize,
    z: usize,
    correction: bool,
    photons: f64,
    predicted: f64,
    instance_hash: &'a str,
    params: &'a str,
}

#[derive(Serialize)]
struct ProbabilityRow<'a> {
    ising: &'a str,
    readout: &'a str,
    correction: bool,
    probability: f64,
    instance_hash: &'a str,
    params: &'a str,
}

#[derive(Serialize)]
struct DiagnosticRow {
    tau: f64,
    norm: f64,
    photons: String,
    tail: String,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Checkpoint diagnostics; per-mode columns are `;`-separated lists.
pub fn write_diagnostics(path: &Path, checkpoints: &[Checkpoint]) -> Result<()> {
    let rows: Vec<DiagnosticRow> = checkpoints
        .iter()
        .map(|c| DiagnosticRow { tau: c.time, norm: c.norm, photons: join(&c.photons), tail: join(&c.tail) })
        .collect();
    write_csv(path, &rows)
}

fn write_run(dir: &Path, name: &str, run: &RunResult) -> Result<()> {
    let runs = ensure_dir(&dir.join("results").join("runs"))?;
    std::fs::write(runs.join(format!("{name}.json")), serde_json::to_string_pretty(run)? + "\n")?;
    let diag = ensure_dir(&dir.join("results").join("diagnostics"))?;
    write_diagnostics(&diag.join(format!("{name}.csv")), &run.checkpoints)
}

fn write_uniform_af(dir: &Path, config: &ExperimentConfig, r: &UniformAfReport) -> Result<()> {
    let results = ensure_dir(&dir.join("results"))?;
    save_instance(&ensure_dir(&dir.join("instances"))?.join("uniform_af.json"), &r.instance)?;
    let params = [serde_json::to_string(&r.without.params)?, serde_json::to_string(&r.with.params)?];
    let mut photons = Vec::new();
    let mut probs = Vec::new();
    for (i, (correction, run, predicted)) in
        [(false, &r.without, &r.predicted_without), (true, &r.with, &r.predicted_with)].into_iter().enumerate()
    {
        let (instance_hash, params) = (run.instance_hash.as_str(), params[i].as_str());
        for (k, (&z, (&photons_k, &predicted_k))) in r.z.iter().zip(run.photons.iter().zip(predicted)).enumerate() {
            photons.push(PhotonRow {
                mode: k + 1,
                z,
                correction,
                photons: photons_k,
                predicted: predicted_k,
                instance_hash,
                params,
            });
        }
        for p in &run.distribution {
            probs.push(ProbabilityRow {
                ising: &p.ising,
                readout: &p.readout,
                correction,
                probability: p.probability,
                instance_hash,
                params,
            });
        }
    }
    write_csv(&results.join("uniform_af_photons.csv"), &photons)?;
    write_csv(&results.join("uniform_af_probabilities.csv"), &probs)?;
    write_run(dir, "uniform_af_without", &r.without)?;
    write_run(dir, "uniform_af_with", &r.with)?;
    let wall = format!("wall_seconds: {} {}", r.without.wall_time.as_secs_f64(), r.with.wall_time.as_secs_f64());
    write_metadata(dir, "uniform_af", config, &[wall])
}

#[derive(Serialize)]
struct BatchRow {
    index: usize,
    seed: u64,
    instance_hash: String,
    normalization: Option<f64>,
    c_without: f64,
    xi_without: f64,
    c_with: f64,
    xi_with: f64,
    levels: usize,
    t_final: f64,
    pump_final: f64,
    detuning: f64,
    kerr: f64,
    dt: f64,
    auto_dt: bool,
    success_without: Option<f64>,
    residual_without: Option<f64>,
    success_with: Option<f64>,
    residual_with: Option<f64>,
    failure_rate: Option<String>,
    residual_rate: Option<String>,
    error: Option<String>,
    params_without: String,
    params_with: String,
}

fn write_batch(dir: &Path, config: &ExperimentConfig, report: &BatchReport) -> Result<()> {
    let results = ensure_dir(&dir.join("results"))?;
    let instances = ensure_dir(&dir.join("instances"))?;
    let mut rows = Vec::new();
    for e in &report.entries {
        save_instance(&instances.join(format!("instance_{:03}.json", e.index)), &e.instance)?;
        for (label, run) in [("without", &e.without), ("with", &e.with)] {
            if let Ok(run) = run {
                write_run(dir, &format!("instance_{:03}_{label}", e.index), run)?;
            }
        }
        let ok = |r: &Result<RunResult, String>| r.as_ref().ok().map(|r| r.metrics);
        let rates = e.rates();
        let errors: Vec<&str> = [&e.without, &e.with].iter().filter_map(|r| r.as_ref().err().map(String::as_str)).collect();
        let b = &config.base;
        rows.push(BatchRow {
            index: e.index,
            seed: e.seed,
            instance_hash: instance_hash(&e.instance),
            normalization: e.without.as_ref().or(e.with.as_ref()).ok().map(|r| r.normalization),
            c_without: config.without.c,
            xi_without: config.without.xi,
            c_with: config.with.c,
            xi_with: config.with.xi,
            levels: b.levels,
            t_final: b.t_final,
            pump_final: b.pump_final,
            detuning: b.detuning,
            kerr: b.kerr,
            dt: b.dt,
            auto_dt: b.auto_dt,
            success_without: ok(&e.without).map(|m| m.success),
            residual_without: ok(&e.without).map(|m| m.residual_energy),
            success_with: ok(&e.with).map(|m| m.success),
            residual_with: ok(&e.with).map(|m| m.residual_energy),
            failure_rate: rates.map(|r| r.0.to_string()),
            residual_rate: rates.map(|r| r.1.to_string()),
            error: (!errors.is_empty()).then(|| errors.join("; ")),
            params_without: serde_json::to_string(&config.params_at(config.without, false))?,
            params_with: serde_json::to_string(&config.params_at(config.with, true))?,
        });
    }
    write_csv(&results.join("batch.csv"), &rows)?;
    let summary: Vec<BatchAggregates> = report.aggregates.into_iter().collect();
    write_csv(&results.join("batch_summary.csv"), &summary)?;
    write_metadata(dir, "batch", config, &[])
}

/// Parse a readout or Ising configuration such as `+--+`.
pub fn parse_spins(text: &str) -> Result<Spins> {
    text.parse()
}
