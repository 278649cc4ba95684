use std::path::Path;
use std::process::{Command, Output};

use soliton_gas_lab::config::SpacetimeSpec;
use soliton_gas_lab::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_soliton-gas"))
}

fn run(cfg: &ExperimentConfig, dir: &Path, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    bin()
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn small() -> ExperimentConfig {
    ExperimentConfig {
        spacetime: SpacetimeSpec::Points(vec![[0.0, 0.0], [0.5, 0.2]]),
        n_values: vec![4, 8],
        trials: 24,
        ..Default::default()
    }
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn default_config_round_trips() {
    let o = bin().arg("default-config").output().unwrap();
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn verify_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&ExperimentConfig::default(), dir.path(), &["verify"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(!text(&o).contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/verify.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn contour_crossing_real_axis_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.contour.clearance = 0.6;
    let o = run(&cfg, dir.path(), &["verify"]);
    assert!(!o.status.success());
    let out = text(&o);
    assert!(out.contains("geometry"), "{out}");
}

#[test]
fn coarse_contour_converges_under_doubling() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.contour.nodes_per_circle = 16;
    let _ = run(&cfg, dir.path(), &["verify"]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/verify.json")).unwrap())
            .unwrap();
    let rows = report["convergence"].as_array().unwrap();
    let nodes: Vec<u64> = rows
        .iter()
        .map(|r| r["nodes_per_circle"].as_u64().unwrap())
        .collect();
    assert_eq!(nodes, [16, 32, 64, 128]);
    let err: Vec<f64> = rows.iter().map(|r| r["error"].as_f64().unwrap()).collect();
    assert!(err[0] > 1e-8, "{err:?}");
    for w in err.windows(2) {
        assert!(w[1] < w[0] || w[1] < 1e-12, "{err:?}");
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let files = [
        "lln.csv",
        "lln_slopes.csv",
        "membership.csv",
        "summary.json",
    ];
    let read = || {
        files
            .map(|f| std::fs::read(dir.path().join("out").join(f)).unwrap())
            .to_vec()
    };
    let o = run(&cfg, dir.path(), &["--threads", "1", "lln"]);
    assert!(o.status.success(), "{}", text(&o));
    let first = read();
    let o = run(&cfg, dir.path(), &["--threads", "3", "lln"]);
    assert!(o.status.success(), "{}", text(&o));
    for (f, (x, y)) in files.iter().zip(first.iter().zip(read())) {
        assert!(!x.is_empty());
        assert!(*x == y, "{f} differs");
    }
}

#[test]
fn seed_flag_changes_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small();
    assert!(run(&cfg, a.path(), &["sample", "--n", "6"])
        .status
        .success());
    assert!(run(&cfg, b.path(), &["--seed", "7", "sample", "--n", "6"])
        .status
        .success());
    let x = std::fs::read_to_string(a.path().join("out/sample.csv")).unwrap();
    let y = std::fs::read_to_string(b.path().join("out/sample.csv")).unwrap();
    assert_eq!(x.lines().count(), 7);
    assert_ne!(x, y);
}

#[test]
fn clt_writes_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&small(), dir.path(), &["clt"]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/clt.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let fixed = [
        "N",
        "x",
        "t",
        "trials",
        "emp_var_G1_re",
        "emp_var_G1_im",
        "emp_E_sq_G1_re",
        "emp_E_sq_G1_im",
        "pred_var_G1",
        "pred_cov_G1_re",
        "pred_cov_G1_im",
        "emp_var_G2",
        "pred_var_G2",
    ];
    assert_eq!(&header[..fixed.len()], fixed);
    let failures = header.iter().position(|h| *h == "failures").unwrap();
    assert!(header[fixed.len()..failures]
        .iter()
        .all(|h| h.starts_with("se_")));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/summary.json")).unwrap())
            .unwrap();
    let mut echoed = small();
    echoed.output.dir = dir.path().join("out");
    assert_eq!(summary["config_hash"], echoed.content_hash());
    assert!(summary["checks"].as_array().unwrap().len() > 4);
}

#[test]
fn corr_needs_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.spacetime = SpacetimeSpec::Points(vec![[0.0, 0.0]]);
    let o = run(&cfg, dir.path(), &["corr"]);
    assert!(!o.status.success());
    assert!(text(&o).contains("two"), "{}", text(&o));
}

#[test]
fn single_trial_commands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    assert!(run(&cfg, dir.path(), &["soliton-eval", "--n", "4"])
        .status
        .success());
    assert!(run(&cfg, dir.path(), &["solve-averaged"]).status.success());
    let mut r = csv::Reader::from_path(dir.path().join("out/averaged.csv")).unwrap();
    for row in r.deserialize::<std::collections::HashMap<String, f64>>() {
        let row = row.unwrap();
        assert!(row["disk_error"] < 1e-9);
        assert!((row["modsq"] - row["modsq_derivative"]).abs() < 1e-6);
    }
    let mut r = csv::Reader::from_path(dir.path().join("out/soliton.csv")).unwrap();
    for row in r.deserialize::<std::collections::HashMap<String, f64>>() {
        let row = row.unwrap();
        assert!(row["route_diff"] < 1e-8);
        assert!(row["abs_psi"] <= row["amplitude_bound"]);
    }
}
