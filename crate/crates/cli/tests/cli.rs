//! End-to-end checks of the `swapfv` binary: artifact layout, config echo,
//! seeding, replica fan-out, and rejection of malformed configurations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use swapfv_cli::load_run_config;

fn swapfv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swapfv"))
}

/// A short cosine run that finishes in well under a second.
fn tiny_run_config() -> serde_json::Value {
    serde_json::json!({
        "problem": {
            "name": "cosine-test",
            "dimension": 1,
            "box": { "lower": [-1.0], "upper": [1.0] },
            "potential": { "kind": "cosine" },
            "epsilon": 0.2,
            "diffusion_scale": 2.0,
            "grid": { "kind": "fixed", "h": 0.05 }
        },
        "engine": "ins",
        "n_pairs": 4,
        "t_final": 4.0,
        "seed": 11,
        "record_stride": 5
    })
}

fn write_config(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run_ok(args: &[&str]) {
    let out = swapfv().args(args).output().expect("binary should launch");
    assert!(
        out.status.success(),
        "swapfv {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn example_configs_parse_and_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).expect("configs directory should exist") {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_run_config(&path)
                .unwrap_or_else(|e| panic!("{} should parse: {e:#}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5, "expected the shipped example configs, found {seen}");
}

#[test]
fn run_writes_the_expected_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let out = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        cfg.to_str().unwrap(),
    ]);

    for name in
        ["trajectory.csv", "histogram_forward.csv", "histogram_backward.csv", "summary.json"]
    {
        assert!(out.join(name).is_file(), "missing artifact {name}");
    }
    let summary = swapfv::read_summary_json(&out.join("summary.json")).unwrap();
    assert_eq!(summary.schema_version, 1);
    assert_eq!(summary.engine, "infinite-swap");
    assert_eq!(summary.seed, 11);
    // Gibbs problem: the forward estimate is exactly zero.
    assert_eq!(summary.lambda_forward.unwrap().lambda, 0.0);
    assert!(summary.config.is_some());
}

#[test]
fn summary_echo_reproduces_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let first = dir.path().join("first");
    run_ok(&[
        "--out-dir",
        first.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        cfg.to_str().unwrap(),
    ]);

    let summary = swapfv::read_summary_json(&first.join("summary.json")).unwrap();
    let echoed = write_config(dir.path(), "echo.json", &summary.config.unwrap());
    let second = dir.path().join("second");
    run_ok(&[
        "--out-dir",
        second.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        echoed.to_str().unwrap(),
    ]);

    let a = fs::read(first.join("trajectory.csv")).unwrap();
    let b = fs::read(second.join("trajectory.csv")).unwrap();
    assert_eq!(a, b, "echoed config should reproduce the trajectory byte-for-byte");
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let base = dir.path().join("base");
    let reseeded = dir.path().join("reseeded");
    run_ok(&[
        "--out-dir",
        base.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    run_ok(&[
        "--out-dir",
        reseeded.to_str().unwrap(),
        "--quiet",
        "--seed",
        "977",
        "run",
        "--config",
        cfg.to_str().unwrap(),
    ]);

    let a = fs::read(base.join("trajectory.csv")).unwrap();
    let b = fs::read(reseeded.join("trajectory.csv")).unwrap();
    assert_ne!(a, b, "a different seed should change the trajectory");
    let summary = swapfv::read_summary_json(&reseeded.join("summary.json")).unwrap();
    assert_eq!(summary.seed, 977, "the summary should carry the effective seed");
}

#[test]
fn replicas_write_suffixed_independent_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let out = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--replicas",
        "2",
    ]);

    let a = fs::read(out.join("trajectory_r0.csv")).unwrap();
    let b = fs::read(out.join("trajectory_r1.csv")).unwrap();
    assert_ne!(a, b, "replicas should follow independent streams");
    let s0 = swapfv::read_summary_json(&out.join("summary_r0.json")).unwrap();
    let s1 = swapfv::read_summary_json(&out.join("summary_r1.json")).unwrap();
    assert_eq!((s0.replica, s1.replica), (0, 1));
    assert_eq!(s0.seed, s1.seed);
}

#[test]
fn malformed_configs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();

    // finite-swap without an intensity
    let mut missing_k = tiny_run_config();
    missing_k["engine"] = "finite-swap".into();
    let path = write_config(dir.path(), "missing_k.json", &missing_k);
    let out =
        swapfv().args(["--quiet", "run", "--config", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("swap_intensity"));

    // unknown field
    let mut unknown = tiny_run_config();
    unknown["walltime"] = 5.into();
    let path = write_config(dir.path(), "unknown.json", &unknown);
    let out =
        swapfv().args(["--quiet", "run", "--config", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());

    // swap intensity on a non-finite-swap engine
    let mut stray_k = tiny_run_config();
    stray_k["swap_intensity"] = 2.0.into();
    let path = write_config(dir.path(), "stray_k.json", &stray_k);
    let out =
        swapfv().args(["--quiet", "run", "--config", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn oracle_subcommand_writes_eigenpair_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let out = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
        "oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "32",
    ]);

    assert!(out.join("eigenpair_forward_density_n32.csv").is_file());
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.join("oracle_forward_density_n32.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["nodes"], 32);
    // Gibbs problem: the principal eigenvalue is exactly zero.
    assert_eq!(report["lambda"].as_f64().unwrap(), 0.0);
}

#[test]
fn resample_and_score_loss_chain_on_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", &tiny_run_config());
    let out = dir.path().join("out");
    run_ok(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
        "run",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    run_ok(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
        "resample",
        "--config",
        cfg.to_str().unwrap(),
        "--trajectory",
        out.join("trajectory.csv").to_str().unwrap(),
        "--count",
        "200",
    ]);

    let points = out.join("resampled_forward.csv");
    let (flat, dim) = swapfv::read_points_csv(&points).unwrap();
    assert_eq!(dim, 1);
    assert_eq!(flat.len(), 200);

    let output = swapfv()
        .args([
            "score-loss",
            "--config",
            cfg.to_str().unwrap(),
            "--points",
            points.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.starts_with("score_matching_loss = "), "unexpected output: {text}");
    let value: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value.is_finite());
}

/// Every configuration shipped under `configs/` must parse, validate, and
/// resolve into a runnable problem.
#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let cfg = load_run_config(&path)
            .unwrap_or_else(|e| panic!("{} failed to load: {e:#}", path.display()));
        swapfv::ProblemSpec::from_config(&cfg.problem)
            .unwrap_or_else(|e| panic!("{} has an invalid problem: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 6, "expected the shipped example configs, found {seen}");
}
