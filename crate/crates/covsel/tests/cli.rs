use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use covsel::cli::cmd_cover;
use covsel::formats::regret::{read_matrix, write_matrix, Provenance};
use covsel_core::{build_cover_sets, greedy_cover, ExactOptions, RegretMatrix};
use proptest::prelude::*;
use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table3.csv")
}

fn covsel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covsel")).arg("--workdir").arg(dir).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TOY: &str = r#"{"simulator": {"dimension": 8, "samples_per_class": 200},
                      "pins": {"demosaicking": 0, "sharpen_micro": 0}}"#;

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.json"), TOY).unwrap();
    dir
}

/// Every file below `root`, relative path and contents, in path order.
fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn cover_on_published_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture();
    let v = stdout_json(&covsel(dir.path(), &["cover", "--matrix", fx.to_str().unwrap(), "--epsilon", "0.10"]));
    assert_eq!(v["representatives"], serde_json::json!([22, 60, 229]));
    assert_eq!(v["assignment"]["22"], serde_json::json!([21, 22, 31]));
    assert_eq!(v["uncovered"], serde_json::json!([]));

    let v = stdout_json(&covsel(dir.path(), &["cover", "--matrix", fx.to_str().unwrap(), "--epsilon", "0.40"]));
    assert_eq!(v["representatives"], serde_json::json!([21]));
    assert_eq!(v["bounds"]["exact"], 1);
}

#[test]
fn malformed_matrix_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "x,1,2\n1,0,0.1\n2,0.3,oops\n").unwrap();
    let out = covsel(dir.path(), &["cover", "--matrix", "bad.csv", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
    assert!(err.contains("oops"), "{err}");
}

#[test]
fn missing_input_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = covsel(dir.path(), &["cover", "--matrix", "nope.csv", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn grid_refuses_overwrite_and_force_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(covsel(dir.path(), &["grid"]).status.success());
    let path = dir.path().join("pipelines.json");
    let first = fs::read(&path).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 243);
    assert_eq!(v[21]["levels"]["post_resize_sharpening"], 0);
    assert_eq!(v[21]["levels"]["downsampling"], 1);
    assert_eq!(v[21]["levels"]["sharpen_micro"], 2);

    let refused = covsel(dir.path(), &["grid"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force"));

    assert!(covsel(dir.path(), &["--force", "grid"]).status.success());
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn toy_run_is_fast_and_complete() {
    let dir = toy_dir();
    let start = Instant::now();
    let out = covsel(dir.path(), &["--config", "toy.json", "run"]);
    let elapsed = start.elapsed();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(elapsed.as_secs() < 60, "toy run took {elapsed:?}");

    let outputs = dir.path().join("outputs");
    assert!(!outputs.join("INCOMPLETE").exists());
    let summary: Value = serde_json::from_slice(&fs::read(outputs.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sources"], 27);
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let greedy = row["covering_size"].as_u64().unwrap();
        let lower = row["lower_bound"].as_u64().unwrap();
        let exact = row["exact"].as_u64().unwrap();
        assert!(lower <= exact && exact <= greedy);
    }
    let csv = fs::read_to_string(outputs.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    for eps in ["0.01", "0.02", "0.04", "0.06", "0.08", "0.1"] {
        let d = outputs.join(format!("eps_{eps}"));
        for f in ["covering.json", "filtered.json", "baselines.json", "clusters.csv", "pareto.json"] {
            assert!(d.join(f).exists(), "missing {}", d.join(f).display());
        }
        let pareto: Value = serde_json::from_slice(&fs::read(d.join("pareto.json")).unwrap()).unwrap();
        let last = pareto["clusters"].as_array().unwrap().last().unwrap()["cumulative_share"].as_f64().unwrap();
        assert_eq!(last, 1.0);
        let clusters = fs::read_to_string(d.join("clusters.csv")).unwrap();
        assert_eq!(clusters.lines().count(), 28);
    }

    // Pinned parameters never vary, so they carry no importance.
    let imp: Value = serde_json::from_slice(&fs::read(outputs.join("eps_0.02/importance.json")).unwrap()).unwrap();
    assert_eq!(imp["mdi"]["demosaicking"], 0.0);
    assert_eq!(imp["mdi"]["sharpen_micro"], 0.0);
    let total: f64 = imp["mdi"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(imp["config"]["criterion"], "entropy");

    let report = covsel(dir.path(), &["--config", "toy.json", "report"]);
    assert!(report.status.success());
    assert_eq!(report.stdout, fs::read(outputs.join("summary.txt")).unwrap());
}

#[test]
fn runs_are_byte_identical_across_workdirs() {
    let a = toy_dir();
    let b = toy_dir();
    for dir in [&a, &b] {
        let out = covsel(dir.path(), &["--config", "toy.json", "--seed", "5", "run"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ta = tree(&a.path().join("outputs"));
    let tb = tree(&b.path().join("outputs"));
    assert!(ta.len() > 30);
    assert_eq!(ta, tb);

    let refused = covsel(a.path(), &["--config", "toy.json", "--seed", "5", "run"]);
    assert_eq!(refused.status.code(), Some(2));
    let forced = covsel(a.path(), &["--config", "toy.json", "--seed", "5", "--force", "run"]);
    assert!(forced.status.success());
    assert_eq!(tree(&a.path().join("outputs")), tb);
}

#[test]
fn failed_stage_leaves_marker() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("features.csv"), "source_id,split,label,f0\n1,train,cover,0\n1,train,stego,zz\n")
        .unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"paths": {"features": "features.csv"}}"#).unwrap();
    let out = covsel(dir.path(), &["--config", "cfg.json", "run"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `features`"), "{err}");
    let marker = fs::read_to_string(dir.path().join("outputs/INCOMPLETE")).unwrap();
    assert!(marker.starts_with("failed: features"), "{marker}");
    assert!(dir.path().join("outputs/pipelines.json").exists());

    let report = covsel(dir.path(), &["--config", "cfg.json", "report"]);
    assert_eq!(report.status.code(), Some(2));
}

#[test]
fn full_grid_at_large_sample_counts_is_gated() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("big.json"), r#"{"simulator": {"samples_per_class": 2000}}"#).unwrap();
    let out = covsel(dir.path(), &["--config", "big.json", "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--full"));
    assert!(!dir.path().join("outputs").exists());
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"epsilons": [0.05, 1.2]}"#).unwrap();
    let out = covsel(dir.path(), &["--config", "c.json", "run"]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.path().join("c.json"), r#"{"epsilon": [0.05]}"#).unwrap();
    assert_eq!(covsel(dir.path(), &["--config", "c.json", "run"]).status.code(), Some(2));
}

#[test]
fn subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let ok = |args: &[&str]| {
        let out = covsel(p, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    ok(&[
        "simulate",
        "--pin",
        "demosaicking=0",
        "--pin",
        "Downsampling=2",
        "--dimension",
        "6",
        "--samples-per-class",
        "80",
    ]);
    ok(&["regret", "--features", "features.csv"]);
    let (matrix, sidecar) = read_matrix(&p.join("regret.csv")).unwrap();
    assert_eq!(matrix.n(), 27);
    assert_eq!(sidecar.unwrap().provenance.test_samples.unwrap(), vec![80; 27]);

    ok(&["cover", "--matrix", "regret.csv", "--epsilon", "0.05", "--out", "cov.json"]);
    ok(&["filter", "--covering", "cov.json", "--min-cover", "3", "--out", "filtered.json"]);
    let filtered: Value = serde_json::from_slice(&fs::read(p.join("filtered.json")).unwrap()).unwrap();
    let k = filtered["representatives"].as_array().unwrap().len();
    let base = stdout_json(&ok(&["baseline", "--covering", "filtered.json", "--variants", "4"]));
    assert_eq!(base["k"], k);
    assert_eq!(base["variants"].as_array().unwrap().len(), 4);

    ok(&["clusters", "--covering", "cov.json", "--matrix", "regret.csv", "--mode", "min-regret", "--out", "cl.csv"]);
    let cl = fs::read_to_string(p.join("cl.csv")).unwrap();
    assert_eq!(cl.lines().next(), Some("source_id,representative_id,mode"));
    assert_eq!(cl.lines().count(), 28);

    let cov: Value = serde_json::from_slice(&fs::read(p.join("cov.json")).unwrap()).unwrap();
    if cov["representatives"].as_array().unwrap().len() > 1 {
        let imp = stdout_json(&ok(&["importance", "--clusters", "cl.csv", "--trees", "20"]));
        assert_eq!(imp["config"]["trees"], 20);
        assert_eq!(imp["mdi"]["demosaicking"], 0.0);
    }

    let bad_pin = covsel(p, &["simulate", "--pin", "denoising=3", "--out", "x.csv"]);
    assert_eq!(bad_pin.status.code(), Some(2));
}

fn random_matrix(n: usize, cells: &[f64]) -> RegretMatrix {
    let mut values = cells[..n * n].to_vec();
    for i in 0..n {
        values[i * n + i] = 0.0;
    }
    RegretMatrix::from_regrets((0..n as u32).map(|i| i * 7 + 3).collect(), values, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cmd_cover_matches_in_process_greedy(
        n in 2usize..24,
        cells in prop::collection::vec(-0.05f64..0.6, 24 * 24),
        eps in 0.01f64..0.3,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix(&path, &random_matrix(n, &cells), Provenance::default()).unwrap();
        let (parsed, _) = read_matrix(&path).unwrap();
        let expected = greedy_cover(&build_cover_sets(&parsed, eps).unwrap());
        let (covering, bounds) = cmd_cover(&path, eps, None, ExactOptions::default()).unwrap();
        prop_assert_eq!(&covering, &expected);
        prop_assert_eq!(bounds.greedy, expected.len());
        prop_assert!(bounds.lower <= bounds.exact.unwrap() && bounds.exact.unwrap() <= bounds.greedy);
    }
}
