//! CSV and JSON outputs consumed by the plotting scripts.

use lhz_kpo::evolve::EvolveOptions;
use lhz_kpo::experiments::{run_sweep, run_uniform_af, ExperimentConfig, ExperimentKind, Preset};

fn small(kind: ExperimentKind, dir: &std::path::Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::preset(kind, Preset::Ci);
    config.base.levels = 4;
    config.base.t_final = 5.0;
    config.instances = 2;
    config.c_grid = vec![0.2, 0.4];
    config.xi_grid = vec![0.3];
    config.output_dir = Some(dir.to_path_buf());
    config
}

fn header(path: std::path::PathBuf) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn uniform_af_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_uniform_af(&small(ExperimentKind::UniformAf, dir.path()), &EvolveOptions::default()).unwrap();
    assert_eq!(report.z, vec![1, 1, 1]);
    let results = dir.path().join("results");
    assert_eq!(header(results.join("uniform_af_photons.csv")), "mode,z,correction,photons,predicted,instance_hash,params");
    assert_eq!(header(results.join("uniform_af_probabilities.csv")), "ising,readout,correction,probability,instance_hash,params");
    let rows = std::fs::read_to_string(results.join("uniform_af_photons.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 * 3);
    assert_eq!(header(results.join("diagnostics/uniform_af_with.csv")), "tau,norm,photons,tail");
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(results.join("runs/uniform_af_without.json")).unwrap()).unwrap();
    assert_eq!(run["ordering"], "mode-major");
    assert_eq!(run["instance_hash"].as_str().unwrap().len(), 64);
    let meta = std::fs::read_to_string(dir.path().join("metadata/uniform_af.txt")).unwrap();
    assert!(meta.contains("rng: ChaCha8Rng"));
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&small(ExperimentKind::Sweep, dir.path()), &EvolveOptions::default()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.completed == 2 && r.mean_success.is_some()));
    assert_eq!(
        header(dir.path().join("results/sweep.csv")),
        "c,xi,correction,instance_hashes,params,completed,failed,mean_success,mean_residual"
    );
}
