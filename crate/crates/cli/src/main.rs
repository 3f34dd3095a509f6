//! `lhz-kpo`: command-line driver for the LHZ Kerr parametric oscillator simulator.
//!
//! Exit codes: 0 on success, 2 on invalid input or configuration, 3 on a
//! numerical failure (norm drift, unstable step, non-convergence, memory budget).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lhz_kpo::experiments::{
    gen_random_instance, run_batch, run_instance, run_sweep, run_uniform_af, variational_report, write_csv,
    write_csv_to,
    write_diagnostics, CouplingPoint, ExperimentConfig, ExperimentKind, Preset,
};
use lhz_kpo::io::{load_instance, load_params, save_instance};
use lhz_kpo::lhz::{build_lhz, c_lower_bound, IsingInstance};
use lhz_kpo::variational::vacuum_stable;
use lhz_kpo::{CorrectionMode, Error, EvolveOptions, Exact, SimParams};

#[derive(Parser)]
#[command(name = "lhz-kpo", version, about = "Simulate KPO networks solving Ising problems in the LHZ encoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances with couplings on the grid {-1, -0.99, ..., 1}.
    Gen {
        #[arg(long, default_value_t = 4)]
        spins: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one instance and print the run as JSON.
    Run {
        #[command(flatten)]
        source: InstanceSource,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
        /// Write checkpoint diagnostics to this CSV.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Uniform antiferromagnet with and without the detuning correction.
    UniformAf {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Random instances with and without the detuning correction.
    Batch {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Mean metrics over a (C, xi) grid.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated C values.
        #[arg(long, value_delimiter = ',')]
        c_grid: Option<Vec<f64>>,
        /// Comma-separated xi values.
        #[arg(long, value_delimiter = ',')]
        xi_grid: Option<Vec<f64>>,
    },
    /// Mean-field photon numbers per mode, optionally against a simulation.
    Variational {
        #[command(flatten)]
        source: InstanceSource,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
        #[arg(long)]
        simulate: bool,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower bound on C that keeps every LHZ minimizer constraint-satisfying.
    Bound {
        #[command(flatten)]
        source: InstanceSource,
    },
    /// Vacuum stability check for the given xi, C and detuning.
    Stability {
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args)]
struct InstanceSource {
    /// Instance JSON file.
    #[arg(long, conflicts_with = "uniform_af")]
    instance: Option<PathBuf>,
    /// Use the uniform antiferromagnet on this many spins.
    #[arg(long)]
    uniform_af: Option<usize>,
}

impl InstanceSource {
    fn load(&self) -> Result<IsingInstance<f64>> {
        match (&self.instance, self.uniform_af) {
            (Some(path), _) => Ok(load_instance(path).with_context(|| format!("reading {}", path.display()))?),
            (None, Some(n)) => Ok(IsingInstance::uniform(n, -1.0)?),
            (None, None) => Err(Error::InvalidInstance("pass --instance or --uniform-af".into()).into()),
        }
    }
}

#[derive(Args, Default)]
struct SimArgs {
    /// JSON file with simulation parameters; flags override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    kerr: Option<f64>,
    #[arg(long)]
    pump_final: Option<f64>,
    #[arg(long)]
    detuning: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    correction: bool,
    #[arg(long, value_enum)]
    correction_mode: Option<ModeArg>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Shrink dt below the RK4 stability limit instead of failing.
    #[arg(long)]
    auto_dt: bool,
    #[arg(long)]
    strict_vacuum_stability: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Instantaneous,
    FinalPump,
}

impl SimArgs {
    fn apply(&self, mut p: SimParams) -> Result<SimParams> {
        if let Some(path) = &self.params {
            p = load_params(path).with_context(|| format!("reading {}", path.display()))?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        set!(kerr, pump_final, detuning, xi, c, t_final, levels, dt);
        p.correction |= self.correction;
        p.auto_dt |= self.auto_dt;
        p.strict_vacuum_stability |= self.strict_vacuum_stability;
        if let Some(m) = self.correction_mode {
            p.correction_mode = match m {
                ModeArg::Instantaneous => CorrectionMode::Instantaneous,
                ModeArg::FinalPump => CorrectionMode::FinalPump,
            };
        }
        p.validate()?;
        Ok(p)
    }

    fn params(&self) -> Result<SimParams> {
        self.apply(SimParams::default())
    }
}

#[derive(Args)]
struct EvolveArgs {
    /// Largest allowed norm drift.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 500)]
    checkpoint_every: usize,
    /// Write a state snapshot every this many steps.
    #[arg(long, requires = "snapshot_dir")]
    snapshot_every: Option<usize>,
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    /// Memory budget for state vectors, in GiB.
    #[arg(long, default_value_t = 4.0)]
    memory_gib: f64,
    #[arg(long)]
    progress: bool,
}

impl EvolveArgs {
    fn options(&self) -> EvolveOptions {
        EvolveOptions {
            tolerance: self.tolerance,
            checkpoint_every: self.checkpoint_every,
            snapshot_every: self.snapshot_every,
            snapshot_dir: self.snapshot_dir.clone(),
            memory_budget: (self.memory_gib * (1u64 << 30) as f64) as u128,
            progress: self.progress,
            ..EvolveOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Full,
    Ci,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "full")]
    preset: PresetArg,
    /// Experiment configuration JSON; replaces the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spins: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Operating point without correction, as C,xi.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    without: Option<Vec<f64>>,
    /// Operating point with correction, as C,xi.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    with: Option<Vec<f64>>,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    evolve: EvolveArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

impl ExperimentArgs {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).map_err(Error::from)?
            }
            None => ExperimentConfig::preset(
                kind,
                match self.preset {
                    PresetArg::Full => Preset::Full,
                    PresetArg::Ci => Preset::Ci,
                },
            ),
        };
        config.kind = kind;
        config.base = self.sim.apply(config.base)?;
        if let Some(v) = self.spins {
            config.spins = v;
        }
        if let Some(v) = self.instances {
            config.instances = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if let Some(v) = &self.without {
            config.without = CouplingPoint { c: v[0], xi: v[1] };
        }
        if let Some(v) = &self.with {
            config.with = CouplingPoint { c: v[0], xi: v[1] };
        }
        config.output_dir = Some(self.out.clone());
        config.validate()?;
        Ok(config)
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    Ok(())
}

fn exact(value: f64) -> Option<Exact> {
    let r = Exact::approximate_float(value)?;
    (*r.numer() as f64 / *r.denom() as f64 == value).then_some(r)
}

fn bound(instance: &IsingInstance<f64>) -> Result<()> {
    let pairs: Option<Vec<_>> = instance.couplings().map(|(p, &v)| Some((p, exact(v)?))).collect();
    let lhz = build_lhz(instance)?;
    let approx = c_lower_bound(&lhz)?;
    let exact_bound = match pairs {
        Some(pairs) => Some(c_lower_bound(&build_lhz(&IsingInstance::new(instance.spins(), pairs)?)?)?.to_string()),
        None => None,
    };
    print_json(&serde_json::json!({ "c_lower_bound": approx, "exact": exact_bound }))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { spins, seed, count, out } => {
            std::fs::create_dir_all(&out)?;
            for i in 0..count {
                let s = lhz_kpo::experiments::batch_seed(seed, i);
                let inst = gen_random_instance::<f64>(spins, s)?;
                let path = out.join(format!("instance_{i:03}.json"));
                save_instance(&path, &inst)?;
                println!("{}", path.display());
            }
        }
        Command::Run { source, sim, evolve, diagnostics } => {
            let result = run_instance(&sim.params()?, &source.load()?, &evolve.options())?;
            if let Some(path) = diagnostics {
                write_diagnostics(&path, &result.checkpoints)?;
            }
            print_json(&result)?;
        }
        Command::UniformAf { exp } => {
            let report = run_uniform_af(&exp.config(ExperimentKind::UniformAf)?, &exp.evolve.options())?;
            print_json(&serde_json::json!({
                "without": report.without.metrics,
                "with": report.with.metrics,
                "photons_without": report.without.photons,
                "photons_with": report.with.photons,
            }))?;
        }
        Command::Batch { exp } => {
            let report = run_batch(&exp.config(ExperimentKind::RandomBatch)?, &exp.evolve.options())?;
            print_json(&report.aggregates)?;
        }
        Command::Sweep { exp, c_grid, xi_grid } => {
            let mut config = exp.config(ExperimentKind::Sweep)?;
            if let Some(g) = c_grid {
                config.c_grid = g;
            }
            if let Some(g) = xi_grid {
                config.xi_grid = g;
            }
            config.validate()?;
            let rows = run_sweep(&config, &exp.evolve.options())?;
            println!("{} grid points written to {}", rows.len(), exp.out.join("results/sweep.csv").display());
        }
        Command::Variational { source, sim, evolve, simulate, out } => {
            let opts = evolve.options();
            let rows = variational_report(&sim.params()?, &source.load()?, simulate.then_some(&opts))?;
            match out {
                Some(path) => write_csv(&path, &rows)?,
                None => write_csv_to(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::Bound { source } => bound(&source.load()?)?,
        Command::Stability { sim } => print_json(&vacuum_stable(&sim.params()?))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<Error>().is_some_and(Error::is_numerical);
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
