use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn hinf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hinf"))
        .args(args)
        .env_remove("HINF_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn value_of(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .parse()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[allow(clippy::approx_constant)]
#[test]
fn synth_scalar_plant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth.json");
    let o = hinf(&[
        "synth",
        path_str(&fixture("scalar_sf")),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("K = -1\n"), "{text}");
    assert!(text.contains("gamma = 0.707106781187\n"), "{text}");
    assert_eq!(value_of(&text, "lyapunov_certificate"), -3.0);

    let json: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["command"], "synth");
    assert_eq!(json["K"], serde_json::json!([[-1.0]]));
    assert_eq!(json["gamma"].as_f64().unwrap(), 0.707106781187);
}

#[test]
fn synth_csv_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth.csv");
    let o = hinf(&[
        "synth",
        path_str(&fixture("scalar_sf")),
        "--format",
        "csv",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("name,value\n"));
    assert!(csv.contains("K[0,0],-1\n"));
    assert!(csv.contains("gamma,0.707106781187\n"));
}

#[test]
fn synth_matrix_market_bundle() {
    let o = hinf(&["synth", path_str(&fixture("stencil_sf"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    // K = BᵀA⁻¹ for the unit three-point stencil
    assert!(text.contains("K (1x3) =\n  -1.5 -2 -1.5\n"), "{text}");
    assert!(value_of(&text, "lyapunov_certificate") <= -1.0 + 1e-9);
}

#[test]
fn estimate_scalar_plant() {
    let o = hinf(&["estimate", path_str(&fixture("scalar_est"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("L = -1\n"));
    assert!(text.contains("error = 0.707106781187\n"));
}

#[test]
fn norm_of_first_order_lag() {
    let o = hinf(&["norm", path_str(&fixture("lag"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((value_of(&stdout(&o), "hinf_norm") - 1.0).abs() < 1e-8);
}

#[test]
fn norm_rejects_unstable_system() {
    let o = hinf(&["norm", path_str(&fixture("unstable"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unstable system"), "{}", stderr(&o));
}

#[test]
fn wrong_bundle_kind_and_missing_files() {
    let o = hinf(&["synth", path_str(&fixture("scalar_est"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = hinf(&["synth", path_str(&fixture("does_not_exist"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_matrix_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("A.csv", "-2,1\n1,oops\n"),
        ("B.csv", "1\n1\n"),
        ("H.csv", "1\n1\n"),
        ("R.csv", "1\n"),
    ] {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    let o = hinf(&["synth", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("A.csv:2:"), "{}", stderr(&o));
}

#[test]
fn non_symmetric_generator_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("A.csv", "-2,1\n0,-2\n"),
        ("B.csv", "1\n1\n"),
        ("H.csv", "1\n1\n"),
        ("R.csv", "1\n"),
    ] {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    let o = hinf(&["synth", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not symmetric"));
}

#[test]
fn demo_rod_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kernel.csv");
    let o = hinf(&[
        "demo",
        "rod",
        "--n",
        "200",
        "--profile",
        "quadratic",
        "--format",
        "csv",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value_of(&stdout(&o), "max_rel_deviation") < 1e-2);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value,weight,g"));
    assert_eq!(lines.count(), 202);
}

#[test]
fn demo_rod_constant_profile_identity_disturbance() {
    let o = hinf(&[
        "demo",
        "rod",
        "--n",
        "50",
        "--length",
        "2",
        "--profile",
        "constant",
        "--disturbance",
        "identity",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(value_of(&stdout(&o), "max_rel_deviation") < 1e-2);
}

#[test]
fn demo_disk_kernel() {
    let o = hinf(&["demo", "disk", "--n", "8", "--n-theta", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let coarse = stdout(&o);
    assert_eq!(value_of(&coarse, "n"), (1 + 7 * 16) as f64);
    let o = hinf(&["demo", "disk", "--n", "16", "--n-theta", "32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fine = stdout(&o);
    let (dc, df) = (
        value_of(&coarse, "max_rel_deviation"),
        value_of(&fine, "max_rel_deviation"),
    );
    assert!(df < 0.75 * dc, "{dc} -> {df}");
}

#[test]
fn demo_irregular_quarter_step() {
    let o = hinf(&["demo", "irregular", "--step", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value_of(&text, "n"), 216.0);
    let g1 = value_of(&text, "gamma");
    let g2 = value_of(&text, "gamma_bisection");
    let ub = value_of(&text, "gamma_upper_bound");
    assert!((g1 - g2).abs() <= 2e-3 * ub);
    let o = hinf(&["demo", "irregular", "--step", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_single_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let o = hinf(&[
        "bench",
        "--step",
        "4/10",
        "--repeats",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(json["env"]
        .as_str()
        .unwrap()
        .contains(std::env::consts::ARCH));
    let row = &json["rows"][0];
    assert_eq!(row["n"], 77);
    for key in ["t_I", "t_II", "ratio", "gamma_I", "gamma_II", "rel_diff"] {
        assert!(row[key].is_number(), "{key}");
    }
    assert!(row["ratio"].as_f64().unwrap() > 1.0);
    let plot = std::fs::read_to_string(dir.path().join("bench_plot.csv")).unwrap();
    assert!(plot.starts_with("n,ratio\n77,"));

    let o = hinf(&["bench", "--step", "0.4", "--repeats", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn place_ranks_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("place.csv");
    let (plant, list) = (fixture("placement"), fixture("placement/candidates.json"));
    let args = [
        "place",
        path_str(&plant),
        "--candidates",
        path_str(&list),
        "--format",
        "csv",
        "--out",
        path_str(&out),
    ];
    let o = hinf(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("best = uniform\n"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("rank,id,gamma\n1,uniform,"));

    let capped = Command::new(env!("CARGO_BIN_EXE_hinf"))
        .args(args)
        .env("HINF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(capped.stdout, o.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_hinf"))
        .args(args)
        .env("HINF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn identical_config_identical_output() {
    let plant = fixture("stencil_sf");
    let args = ["synth", path_str(&plant)];
    let a = hinf(&args);
    let b = hinf(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = hinf(&["demo", "rod", "--n", "40"]);
    let d = hinf(&["demo", "rod", "--n", "40"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn bad_flags_are_usage_errors() {
    let o = hinf(&["synth", path_str(&fixture("scalar_sf")), "--tol", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hinf(&["demo", "rod", "--profile", "cubic"]);
    assert_eq!(o.status.code(), Some(2));
}
