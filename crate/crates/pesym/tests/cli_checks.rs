//! End-to-end checks of the command-line surface: exit codes, report
//! determinism, file emission, and the configuration precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pesym")
}

fn catalog_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../catalog")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|s| s.to_string())
        .collect()
}

/// Data lines only: the manifest header carries a timestamp and is
/// excluded from determinism comparisons.
fn data_lines(out: &Output) -> Vec<String> {
    stdout_lines(out)
        .into_iter()
        .filter(|l| !l.starts_with('#'))
        .collect()
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pesym_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_symmetries_single_case_passes() {
    let cat = catalog_root();
    let out = run(&[
        "verify-symmetries",
        "--catalog",
        cat.to_str().unwrap(),
        "--table",
        "1",
        "--case",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let lines = data_lines(&out);
    // 5 operators x 2 instantiations, plus negative records and a summary.
    let listed = lines
        .iter()
        .filter(|l| l.contains("\"kind\":\"listed\""))
        .count();
    assert_eq!(listed, 10);
    assert!(lines.iter().any(|l| l.contains("\"passed\":true")));
}

#[test]
fn verify_symmetries_negative_focus_exits_zero() {
    let cat = catalog_root();
    let out = run(&[
        "verify-symmetries",
        "--catalog",
        cat.to_str().unwrap(),
        "--table",
        "1",
        "--case",
        "1",
        "--negative",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = data_lines(&out);
    assert!(lines
        .iter()
        .any(|l| l.contains("\"kind\":\"negative\"") && l.contains("\"passed\":true")));
}

#[test]
fn verify_symmetries_report_is_deterministic() {
    let cat = catalog_root();
    let dir = tempdir("determinism");
    let out_a = dir.join("a.jsonl");
    let out_b = dir.join("b.jsonl");
    let base = [
        "verify-symmetries",
        "--catalog",
        cat.to_str().unwrap(),
        "--table",
        "2",
        "--case",
        "13",
        "--seed",
        "7",
        "--out",
    ];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.push(out_a.to_str().unwrap());
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.push(out_b.to_str().unwrap());
    let a = run(&args_a);
    let b = run(&args_b);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(data_lines(&a), data_lines(&b));
    // The written reports agree line for line once the manifest header
    // (which carries a timestamp) is stripped.
    let strip = |p: &std::path::Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.to_string())
            .collect()
    };
    let lines_a = strip(&out_a);
    assert!(!lines_a.is_empty());
    assert_eq!(lines_a, strip(&out_b));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_transforms_selected_branches() {
    let cat = catalog_root();
    let out = run(&[
        "verify-transforms",
        "--catalog",
        cat.to_str().unwrap(),
        "--table",
        "3",
        "--case",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let lines = data_lines(&out);
    assert!(lines
        .iter()
        .any(|l| l.contains("\"target_table\":1") && l.contains("\"target_case\":8")));

    let out = run(&[
        "verify-transforms",
        "--catalog",
        cat.to_str().unwrap(),
        "--table",
        "4",
        "--case",
        "3",
        "--branch",
        "alpha zero",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = data_lines(&out);
    assert!(lines
        .iter()
        .any(|l| l.contains("\"target_case\":11") && l.contains("\"passed\":true")));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["verify-symmetries", "--case", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["figures", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["reduce", "--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verification_failure_exits_one() {
    // A doctored catalog whose only entry lists a wrong operator.
    let dir = tempdir("badcat");
    for sub in ["table1", "table2", "table3", "table4"] {
        std::fs::create_dir_all(dir.join(sub)).unwrap();
    }
    std::fs::write(
        dir.join("table1/case01.toml"),
        r#"
table = 1
case = 1
d = "D(U)"
f = "exp(V)*f(U)"
g = "exp(V)*g(U)"
functions = ["D", "f", "g"]
[[generators]]
xi0 = "1"
xi1 = "0"
eta1 = "0"
eta2 = "0"
[[generators]]
xi0 = "0"
xi1 = "1"
eta1 = "0"
eta2 = "0"
[[generators]]
xi0 = "2*t"
xi1 = "x"
eta1 = "0"
eta2 = "-2.5"
[negative]
xi0 = "2*t"
xi1 = "x"
eta1 = "0"
eta2 = "-4"
"#,
    )
    .unwrap();
    let out = run(&["verify-symmetries", "--catalog", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn reduce_exact_emits_profile_with_tiny_residuals() {
    let dir = tempdir("reduce");
    let out = run(&["reduce", "--mode", "exact", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = data_lines(&out).pop().unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["max_residual_cell"].as_f64().unwrap() < 1e-11);
    assert!(v["max_residual_nutrient"].as_f64().unwrap() < 1e-11);
    // Sign diagnostics are reported; for the reference parameters the
    // source pair happens to be positive on the solution.
    assert!(v["source_min"].as_f64().unwrap() > 0.0);
    assert!(v["uptake_min"].as_f64().unwrap() > 0.0);
    let profile = std::fs::read_to_string(dir.join("profile.csv")).unwrap();
    assert!(profile.starts_with("# manifest: "));
    assert_eq!(profile.lines().count(), 2 + 201);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn reduce_shoot_recovers_front_constant() {
    let dir = tempdir("shoot");
    let out = run(&["reduce", "--mode", "shoot", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = data_lines(&out).pop().unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!((v["omega0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn reduce_cubic_source_matches() {
    let dir = tempdir("cubic");
    let out = run(&[
        "reduce",
        "--mode",
        "shoot",
        "--cubic",
        "--m",
        "0",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report = data_lines(&out).pop().unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!((v["omega0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["phi0"].as_f64().unwrap() - 0.125).abs() < 1e-6);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = tempdir("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "m = 0\nomega0 = 1\n# comment line\nq0 = 0.5\n").unwrap();
    // Config alone: constant diffusivity gives phi0 = 0.125.
    let out = run(&[
        "reduce",
        "--mode",
        "exact",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("a").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&data_lines(&out).pop().unwrap()).unwrap();
    assert!((v["phi0"].as_f64().unwrap() - 0.125).abs() < 1e-12);
    // Flag overrides the file: m = 1 gives phi0 = 0.25.
    let out = run(&[
        "reduce",
        "--mode",
        "exact",
        "--config",
        cfg.to_str().unwrap(),
        "--m",
        "1",
        "--out",
        dir.join("b").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&data_lines(&out).pop().unwrap()).unwrap();
    assert!((v["phi0"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_emits_snapshots_and_error_report() {
    let dir = tempdir("simulate");
    let out = run(&[
        "simulate",
        "--grid-n",
        "64",
        "--t0",
        "1",
        "--t-end",
        "1.1",
        "--snapshots",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let snaps = std::fs::read_to_string(dir.join("snapshots.csv")).unwrap();
    assert!(snaps
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("t,s,y,r,U,V,alpha,c"));
    // 3 frames (initial + 2 snapshots) x 65 nodes.
    assert_eq!(snaps.lines().count(), 2 + 3 * 65);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("error_report.json")).unwrap())
            .unwrap();
    assert!(report["err_front"].as_f64().unwrap() < 1e-3);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_convergence_ladder_reports_order() {
    let dir = tempdir("ladder");
    let out = run(&[
        "simulate",
        "--grid-n",
        "64",
        "--t0",
        "1",
        "--t-end",
        "1.2",
        "--convergence",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("error_report.json")).unwrap())
            .unwrap();
    let order = report["observed_order"].as_f64().unwrap();
    assert!((1.5..=2.5).contains(&order), "order {order}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn figures_emit_expected_files() {
    let dir = tempdir("figures");
    for which in ["1", "4", "5"] {
        let out = run(&["figures", which, "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "figure {which}: {out:?}");
    }
    for file in [
        "fig1_alpha.csv",
        "fig1_c.csv",
        "fig4_s.csv",
        "fig4_q.csv",
        "fig5_f.csv",
    ] {
        assert!(dir.join(file).exists(), "{file} missing");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn catalog_listing_covers_all_entries() {
    let cat = catalog_root();
    let out = run(&["catalog", "--catalog", cat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    let classification = lines.iter().filter(|l| l.contains("operators")).count();
    let reductions = lines.iter().filter(|l| l.contains("maps onto")).count();
    assert_eq!(classification, 35);
    // 22 rows, branch rows counted separately.
    assert_eq!(reductions, 28);
}

#[test]
fn missing_catalog_is_a_usage_error() {
    let out = run(&[
        "verify-symmetries",
        "--catalog",
        "/nonexistent/catalog/path",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new("/nonexistent/catalog/path").exists());
}
