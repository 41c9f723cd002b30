//! End-to-end checks of the batch front-end: file round trips, config-driven
//! commands, provenance embedding, and process exit codes.

use std::path::Path;
use std::process::Command;

use gaussfold::config::{SimulateConfig, ValidateClustersConfig};
use gaussfold::linalg::{read_matrix_csv, rng_from_seed, write_matrix_csv, Matrix};
use gaussfold::runner;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_gaussfold")
}

fn write_input(dir: &Path, rows: usize, cols: usize, seed: u64) -> std::path::PathBuf {
    let mut rng = rng_from_seed(seed);
    let x = gaussfold::linalg::sample::standard_normal_matrix(rows, cols, &mut rng);
    let path = dir.join("input.csv");
    write_matrix_csv(&path, &x).unwrap();
    path
}

#[test]
fn decompose_then_reconstruct_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 4, 5, 11);
    let original = read_matrix_csv(&input).unwrap();
    let out = dir.path().join("folds");

    let status = Command::new(binary())
        .args([
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--plan",
            "thinning",
            "--eps",
            "0.5,0.5",
            "--sigma-prime",
            "iso:1.0",
            "--seed",
            "7",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("plan.json").exists());

    let rebuilt_path = dir.path().join("rebuilt.csv");
    let status = Command::new(binary())
        .args([
            "reconstruct",
            "--dir",
            out.to_str().unwrap(),
            "--output",
            rebuilt_path.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let rebuilt = read_matrix_csv(&rebuilt_path).unwrap();
    assert!((rebuilt - original).abs().max() < 1e-12);
}

#[test]
fn decompose_matches_library_for_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 2, 4, 3);
    let x = read_matrix_csv(&input).unwrap();
    let out = dir.path().join("folds");
    let spec = runner::DecomposeSpec {
        input: input.display().to_string(),
        plan: runner::PlanSpec::Thinning { eps: vec![0.5, 0.5] },
        sigma_prime: runner::NoiseSpec::Iso { variance: 1.0 },
        seed: 42,
    };
    runner::run_decompose(&spec, &out).unwrap();
    let fold0 = read_matrix_csv(&out.join("fold_0.csv")).unwrap();

    let plan = gaussfold::decompose::make_plan_thinning(&[0.5, 0.5], 2).unwrap();
    let fs = gaussfold::decompose::general_decompose(
        &x,
        &plan,
        &gaussfold::linalg::CovModel::identity(4),
        42,
    )
    .unwrap();
    assert!((fold0 - fs.fold(0)).abs().max() < 1e-12);
}

#[test]
fn simulate_command_writes_replicates_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimulateConfig {
        a: 4,
        b: 20,
        rho: 0.8,
        omegas: vec![],
        q1: vec![0.71],
        sigma_prime: 1.0,
        methods: vec![gaussfold::inference::Method::Conditional],
        replicates: 3,
        seed: 5,
        alpha: 0.05,
    };
    let out = dir.path().join("sim");
    let batches = runner::run_simulate(&cfg, &out).unwrap();
    assert_eq!(batches.len(), 1);
    let text = std::fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert!(text.starts_with("q1,omega,replicate,seed,method"));
    assert_eq!(text.lines().count(), 4); // header + 3 replicates
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    // provenance carries the full config and version
    assert_eq!(summary["provenance"]["config"]["a"], 4);
    assert_eq!(summary["provenance"]["version"], gaussfold::version());
    assert!(out.join("replicates.meta.json").exists());
}

#[test]
fn simulate_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimulateConfig {
        a: 4,
        b: 16,
        rho: 0.7,
        omegas: vec![0.8],
        q1: vec![0.8],
        sigma_prime: 1.0,
        methods: vec![gaussfold::inference::Method::Conditional],
        replicates: 2,
        seed: 9,
        alpha: 0.05,
    };
    let out1 = dir.path().join("s1");
    let out2 = dir.path().join("s2");
    runner::run_simulate(&cfg, &out1).unwrap();
    runner::run_simulate(&cfg, &out2).unwrap();
    let a = std::fs::read_to_string(out1.join("replicates.csv")).unwrap();
    let b = std::fs::read_to_string(out2.join("replicates.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn validate_clusters_data_mode_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // synthetic two-block data written to CSV, then treated as observed
    let delta = gaussfold::casestudy::block_delta(&[3, 3], 0.8).unwrap();
    let mut rng = rng_from_seed(21);
    let x = gaussfold::linalg::sample_matrix_normal_with(
        &Matrix::zeros(6, 50),
        &gaussfold::linalg::CovModel::dense(delta).unwrap(),
        &gaussfold::linalg::CovModel::ar1(0.5, 50).unwrap(),
        &mut rng,
    )
    .unwrap();
    let input = dir.path().join("x.csv");
    write_matrix_csv(&input, &x).unwrap();

    let cfg = ValidateClustersConfig {
        input_csv: Some(input.display().to_string()),
        blocks: vec![],
        within_corr: None,
        b: None,
        rho: None,
        q1: 0.5_f64.powf(0.25),
        replicates: None,
        seed: 3,
    };
    let out = dir.path().join("vc");
    let res = runner::run_validate_clusters(&cfg, &out).unwrap();
    assert!(res.best_h.is_some());
    assert!(out.join("curve.csv").exists());
    assert!(out.join("clusters.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["best_h"].as_u64().is_some());
}

#[test]
fn exit_codes_follow_the_contract() {
    // config error: missing input file -> exit 2
    let status = Command::new(binary())
        .args([
            "decompose",
            "--input",
            "/nonexistent/never.csv",
            "--plan",
            "fission",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // config error: bad plan spec -> exit 2
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 2, 2, 1);
    let status = Command::new(binary())
        .args([
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--plan",
            "thinning",
            "--eps",
            "0.9,0.9",
            "--out-dir",
            dir.path().join("o").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));

    // numerical failure domain: independent split of a single row -> exit 3
    let single = write_input(dir.path(), 1, 3, 2);
    let status = Command::new(binary())
        .args([
            "decompose",
            "--input",
            single.to_str().unwrap(),
            "--plan",
            "info-preserving",
            "--sizes",
            "1",
            "--out-dir",
            dir.path().join("o2").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(3));
}

#[test]
fn gp_decompose_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("gp.csv");
    std::fs::write(&input, "0.0,0.0,1.5\n0.5,0.2,2.0\n1.0,0.4,0.5\n1.5,0.1,-0.3\n").unwrap();
    let out = dir.path().join("gp-out");
    let status = Command::new(binary())
        .args([
            "gp-decompose",
            "--input",
            input.to_str().unwrap(),
            "--kernel",
            "white:1.0",
            "--q-col",
            "0.8,0.6",
            "--seed",
            "5",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let fold0 = std::fs::read_to_string(out.join("gp_fold_0.csv")).unwrap();
    assert!(fold0.starts_with("t0,t1,value"));
    assert_eq!(fold0.lines().count(), 5);
    assert!(out.join("gp_plan.json").exists());
}
