use std::path::Path;
use std::process::{Command, Output};

fn rbspectro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbspectro")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(code(&rbspectro(&["gen-noise", "--alpha", "x"])), 2);
    assert_eq!(code(&rbspectro(&["no-such-command"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = rbspectro(&["gen-noise", "--alpha", "4.5", "--amp", "1e-5", "--out", &p(dir.path(), "n.csv")]);
    assert_eq!(code(&out), 2);
    let out = rbspectro(&["gen-noise", "--alpha", "1", "--amp", "1e-5", "--n", "1000", "--out", &p(dir.path(), "n.csv")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "desk.json");
    assert_eq!(code(&rbspectro(&["init-config", "--preset", "desk", "--out", &cfg])), 0);
    let out = rbspectro(&["run-pipeline", "--config", &cfg, "--set", "no_such_field=1"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let out = rbspectro(&["run-pipeline", "--config", &cfg, "--set", "holdout.size=0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_and_corrupt_inputs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = p(dir.path(), "missing.bin");
    assert_eq!(code(&rbspectro(&["export-csv", "--data", &missing, "--out", &p(dir.path(), "x.csv")])), 3);
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"not a dataset at all").unwrap();
    let out = rbspectro(&["export-csv", "--data", bad.to_str().unwrap(), "--out", &p(dir.path(), "x.csv")]);
    assert_eq!(code(&out), 3);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn run_rb_writes_curves_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = p(dir.path(), "rb.csv");
    let out = rbspectro(&["run-rb", "--alpha", "1", "--amp", "1e-4", "--gates", "50", "--runs", "5", "--seed", "1", "--out", &out_csv]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("n,F_uncorrected,F_corrected,kappa"));
    assert_eq!(text.lines().count(), 51);
    assert!(dir.path().join("rb.csv.json").exists());
}
