use std::path::Path;

use rbspectro::dataset::GridSpec;
use rbspectro::pipeline::{run_pipeline, verify_summary, PipelineConfig};

fn tiny(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::desk(dir);
    cfg.calibration.n_runs = 20;
    let small = |alphas: Vec<f64>, log_amps: Vec<f64>, seed| GridSpec {
        alpha_points: alphas,
        log_amp_points: log_amps,
        replicas_per_cell: 2,
        rb_runs_per_replica: 5,
        n_gates: 60,
        base_seed: seed,
    };
    cfg.alpha_grid = small(vec![0.5, 1.5, 2.5], vec![-5.0, -4.5], 1);
    cfg.amplitude_grid = small(vec![1.5], vec![-6.0, -5.0, -4.0], 2);
    cfg.holdout.size = 6;
    for net in [&mut cfg.alpha_network, &mut cfg.amplitude_network] {
        net.hyperparams.n_epochs = 4;
        net.hyperparams.bin_size = 2;
        net.hyperparams.n_neurons = 8;
    }
    cfg
}

#[test]
fn rerun_is_cached_and_resumes_after_partial_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let first = run_pipeline(&cfg).unwrap();
    assert!(!first.executed.is_empty());
    let summary_bytes = std::fs::read(dir.path().join("summary.json")).unwrap();

    let second = run_pipeline(&cfg).unwrap();
    assert!(second.executed.is_empty(), "{:?}", second.executed);
    assert_eq!(std::fs::read(dir.path().join("summary.json")).unwrap(), summary_bytes);

    std::fs::remove_file(dir.path().join("summary.json")).unwrap();
    std::fs::remove_file(dir.path().join("amplitude_network.json")).unwrap();
    let third = run_pipeline(&cfg).unwrap();
    assert_eq!(third.executed, vec!["amplitude-train".to_string()]);
    assert_eq!(std::fs::read(dir.path().join("summary.json")).unwrap(), summary_bytes);
    verify_summary(dir.path()).unwrap();
}

#[test]
fn changed_hyperparameter_reruns_only_that_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    run_pipeline(&cfg).unwrap();
    cfg.alpha_network.hyperparams.n_epochs = 5;
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.executed, vec!["alpha-train".to_string()]);
}

#[test]
fn shipped_configs_match_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let desk = PipelineConfig::from_json(&std::fs::read_to_string(root.join("desk.json")).unwrap()).unwrap();
    assert_eq!(desk, PipelineConfig::desk("out/desk"));
    let full = PipelineConfig::from_json(&std::fs::read_to_string(root.join("full.json")).unwrap()).unwrap();
    assert_eq!(full, PipelineConfig::full("out/full"));
    let grid: GridSpec = serde_json::from_str(&std::fs::read_to_string(root.join("grids/alpha.json")).unwrap()).unwrap();
    assert_eq!(grid, GridSpec::alpha_default(0));
}
