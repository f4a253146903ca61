//! End-to-end tests of the `mvm` binary: exit codes, output files, and
//! rerun determinism.

use std::path::Path;
use std::process::{Command, Output};
use tempfile::tempdir;

fn mvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

const TINY_TRAIN: &str = "mode = unconditional\nbatch_size = 8\ntriplet_count = 8\nepochs = 4\nsteps_per_epoch = 2\ndiagnostics_interval = 2\ngen_hidden = 8\nmet_hidden = 8\n";

#[test]
fn train_writes_trace_with_one_row_per_epoch() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, TINY_TRAIN);
    let out = dir.path().join("out");
    let result = mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));

    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], mvm::io::TRACE_HEADER);
    assert_eq!(lines.len(), 1 + 4, "header plus one row per epoch");

    for name in [
        "spectra.csv",
        "checkpoint_f.ckpt",
        "checkpoint_g.ckpt",
        "config_resolved.cfg",
        "manifest.txt",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    // Snapshots and interval checkpoints at epochs 2 and 4.
    assert!(out.join("snapshots/sf_epoch_00002.csv").exists());
    assert!(out.join("snapshots/sf_epoch_00004.csv").exists());
    assert!(out.join("checkpoints/f_epoch_00002.ckpt").exists());
    assert!(out.join("checkpoints/g_epoch_00004.ckpt").exists());

    // The resolved config reconstructs the run.
    let resolved = std::fs::read_to_string(out.join("config_resolved.cfg")).unwrap();
    assert!(resolved.contains("mode = unconditional"));
    assert!(resolved.contains("batch_size = 8"));
}

#[test]
fn missing_mode_key_is_named_in_the_error() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "seed = 3\n");
    let out = dir.path().join("out");
    let result = mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("mode"), "stderr was: {stderr}");
}

#[test]
fn unknown_key_reports_file_and_line() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("typo.cfg");
    write(&cfg, "mode = unconditional\nlamda = 1\n");
    let out = dir.path().join("out");
    let result = mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("lamda") && stderr.contains(":2:"), "stderr: {stderr}");
}

#[test]
fn identical_rerun_is_byte_identical() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, TINY_TRAIN);
    let (out1, out2) = (dir.path().join("o1"), dir.path().join("o2"));
    assert!(mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()])
        .status
        .success());
    assert!(mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()])
        .status
        .success());
    let t1 = std::fs::read(out1.join("trace.csv")).unwrap();
    let t2 = std::fs::read(out2.join("trace.csv")).unwrap();
    assert_eq!(t1, t2);
    let s1 = std::fs::read(out1.join("spectra.csv")).unwrap();
    let s2 = std::fs::read(out2.join("spectra.csv")).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn non_finite_abort_uses_distinct_exit_code() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("diverge.cfg");
    write(
        &cfg,
        "mode = unconditional\nbatch_size = 8\nepochs = 4\nsteps_per_epoch = 4\ngen_lr = 1e200\ngen_hidden = 8\nmet_hidden = 8\n",
    );
    let out = dir.path().join("out");
    let result = mvm(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
    // Last valid checkpoint still written.
    assert!(out.join("checkpoint_f.ckpt").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("aborted_non_finite"), "{manifest}");
}

fn printed_value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` line in {stdout:?}"))
        .parse()
        .unwrap()
}

#[test]
fn descriptors_two_point_file() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    write(&csv, "0,0\n3,4\n");
    let result = mvm(&["descriptors", "--input", csv.to_str().unwrap(), "--p", "2"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    // Two points at distance 5: diam₂ = 5/√2.
    let expected = 5.0 / 2.0_f64.sqrt();
    assert!((printed_value(&stdout, "diam_2") - expected).abs() < 1e-12);
    assert!(stdout.contains("frechet_mean_index = 0"));
}

#[test]
fn descriptors_same_file_twice_gives_zero_hausdorff() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    write(&csv, "0,0\n1,0\n0,1\n1,1\n");
    let result = mvm(&[
        "descriptors",
        "--input",
        csv.to_str().unwrap(),
        "--input2",
        csv.to_str().unwrap(),
        "--p",
        "2",
    ]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("hausdorff = 0"), "stdout: {stdout}");
    assert!(stdout.contains("centroid_distance = 0"), "stdout: {stdout}");
    // Unit square: diam₂ = 1 exactly.
    assert!(stdout.contains("diam_2 = 1\n"), "stdout: {stdout}");
}

#[test]
fn descriptors_rejects_ragged_csv() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("ragged.csv");
    write(&csv, "1,2\n3\n");
    let result = mvm(&["descriptors", "--input", csv.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn diagnose_two_point_spectrum() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    write(&csv, "0,0\n0,3\n");
    let result = mvm(&["diagnose", "--input", csv.to_str().unwrap(), "--count", "2"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("eigenvalues = 1,-1"), "stdout: {stdout}");
}

#[test]
fn diagnose_degenerate_file_gives_zero_spectrum() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    write(&csv, "1,1\n1,1\n1,1\n");
    let result = mvm(&["diagnose", "--input", csv.to_str().unwrap(), "--count", "3"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("eigenvalues = 0,0,0"), "stdout: {stdout}");
}

#[test]
fn diagnose_writes_pca_projection() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    write(&csv, "0,0\n1,0\n2,0\n3,0\n");
    let pca = dir.path().join("proj.csv");
    let result = mvm(&[
        "diagnose",
        "--input",
        csv.to_str().unwrap(),
        "--count",
        "2",
        "--pca",
        pca.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let projected = mvm::io::read_sample_csv(&pca).unwrap();
    assert_eq!(projected.len(), 4);
    assert_eq!(projected.dim(), 2);
    // Collinear input: second principal coordinate vanishes.
    for p in projected.points() {
        assert!(p[1].abs() < 1e-9);
    }
}

#[test]
fn gradcheck_passes_and_corrupt_hook_fails() {
    let ok = mvm(&["gradcheck", "--seed", "0"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("0 failures"), "stdout: {stdout}");

    let again = mvm(&["gradcheck", "--seed", "0"]);
    assert_eq!(ok.stdout, again.stdout, "same seed must give identical reports");

    let bad = mvm(&["gradcheck", "--seed", "0", "--corrupt"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn descriptors_accepts_checkpoint_metric() {
    let dir = tempdir().unwrap();
    // Save an identity-like metric network and use it as the pullback.
    let net = mvm::net::DenseNetwork::identity(2);
    let ckpt = dir.path().join("g.ckpt");
    mvm::io::save_checkpoint(&ckpt, &net, 7).unwrap();

    let csv = dir.path().join("pts.csv");
    write(&csv, "0,0\n3,4\n");
    let result = mvm(&[
        "descriptors",
        "--input",
        csv.to_str().unwrap(),
        "--metric",
        ckpt.to_str().unwrap(),
        "--p",
        "2",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    let expected = 5.0 / 2.0_f64.sqrt();
    assert!((printed_value(&stdout, "diam_2") - expected).abs() < 1e-12);
}
