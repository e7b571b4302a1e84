use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn gmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmt"))
        .args(args)
        .env_remove("GMT_SEED")
        .output()
        .expect("binary runs")
}

fn scene(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn area_circle_and_sphere() {
    let out = gmt(&["area", &scene("circle.json"), "--tol", "1e-8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["value"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-8);

    let out = gmt(&["area", &scene("sphere.json"), "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 4.0 * PI).abs() < 1e-6);
    assert_eq!(v["charts"].as_array().unwrap().len(), 1);
    assert!(v["depth"].as_u64().unwrap() >= 1);
}

#[test]
fn area_field_override() {
    // x1² + x2² ≡ 4 on the radius-2 circle: 4 · 4π
    let out = gmt(&[
        "area",
        &scene("two_circles.json"),
        "--field",
        "(x1 - 5)^2 + x2^2",
    ]);
    let v = json(&out);
    let circle2 = v["charts"][1]["value"].as_f64().unwrap();
    assert!((circle2 - 16.0 * PI).abs() < 1e-7);
}

#[test]
fn malformed_scene_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"ambient_dim\": 2, \"charts\": [").unwrap();
    let out = gmt(&["area", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());

    let out = gmt(&["area", "/nonexistent/scene.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rank_deficient_chart_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("flat.json");
    fs::write(
        &p,
        r#"{"ambient_dim": 2, "charts": [{"param_dim": 1, "domain": [[0, 1]], "map": ["0", "0"]}]}"#,
    )
    .unwrap();
    assert_eq!(gmt(&["area", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic_and_uses_17_digits() {
    let a = gmt(&["area", &scene("two_circles.json")]);
    let b = gmt(&["area", &scene("two_circles.json")]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("\"value\":1.8849555921538759e1"), "{text}");
}

#[test]
fn coarea_exit_codes() {
    let out = gmt(&[
        "coarea",
        "--h",
        "sqrt(x1^2+x2^2)",
        "--a",
        "1",
        "--b",
        "2",
        "--res",
        "128",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["rel_err"].as_f64().unwrap() < 0.01);
    assert_eq!(v["per_slice"].as_array().unwrap().len(), 128);

    let out = gmt(&["coarea", "--h", "x1", "--a", "2", "--b", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = gmt(&["coarea", "--h", "x1 +", "--a", "0", "--b", "1"]);
    assert_eq!(out.status.code(), Some(1));

    // a coarse grid with a tiny threshold trips the discrepancy gate
    let out = gmt(&[
        "coarea",
        "--h",
        "sqrt(x1^2+x2^2)",
        "--a",
        "1",
        "--b",
        "2",
        "--res",
        "16",
        "--max-rel-err",
        "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["rel_err"].as_f64().unwrap() > 1e-9);

    let out = gmt(&[
        "coarea", "--h", "x1^3", "--a", "-1e-20", "--b", "1e-20", "--lo", "-1", "--hi", "1",
        "--res", "8", "--slices", "4",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(json(&out)["excluded_t_measure"].as_f64().unwrap() > 0.0);
}

#[test]
fn coarea_fubini_case() {
    let out = gmt(&[
        "coarea", "--h", "x1", "--a", "0", "--b", "1", "--lo", "0", "--hi", "1", "--res", "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["rel_err"].as_f64().unwrap() < 1e-9);
    assert!((v["lhs"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn net_csv_and_exit_codes() {
    let out = gmt(&["net", "--f", "sin(x1)", "--a", "0", "--b", "pi"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,cells,sum,delta"));
    let last = text.lines().last().unwrap();
    let sum: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((sum - 2.0).abs() < 1e-8);
    assert!(!text.contains('\r'));

    let out = gmt(&[
        "net",
        "--f",
        "x1",
        "--a",
        "0",
        "--b",
        "1",
        "--max-steps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("step,cells,sum,delta\n"));

    let out = gmt(&["net", "--f", "x2", "--a", "0", "--b", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn limit_study_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let js = dir.path().join("summary.json");
    let out = gmt(&[
        "limit-study",
        &scene("shrinking_circles.json"),
        "--field",
        "x1^2 + x2^2",
        "--k-max",
        "10",
        "--tol",
        "1e-3",
        "--quad-tol",
        "1e-10",
        "--csv-out",
        csv.to_str().unwrap(),
        "--json-out",
        js.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&js).unwrap(), out.stdout);
    let v = json(&out);
    for row in v["rows"].as_array().unwrap() {
        let k = row["k"].as_f64().unwrap();
        let expected = 2.0 * PI * (1.0 + 1.0 / k).powi(3);
        assert!((row["value"].as_f64().unwrap() - expected).abs() < 1e-8);
    }
    // gap at k = 10 is 2π(1.1³ − 1) ≈ 2.08, far above 10 · tol
    assert_eq!(v["converged"], Value::Bool(false));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next(), Some("k,value,gap"));
    assert_eq!(table.lines().count(), 11);

    let out = gmt(&[
        "limit-study",
        &scene("shrinking_circles.json"),
        "--field",
        "0",
        "--k-max",
        "5",
    ]);
    let v = json(&out);
    assert!(v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["gap"].as_f64() == Some(0.0)));

    let out = gmt(&[
        "limit-study",
        &scene("shrinking_circles.json"),
        "--k-max",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_arguments_exit_1() {
    assert_eq!(gmt(&["area"]).status.code(), Some(1));
    assert_eq!(gmt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gmt(&["--help"]).status.code(), Some(0));
}

#[test]
fn threads_flag_does_not_change_results() {
    let a = gmt(&[
        "--threads",
        "1",
        "coarea",
        "--h",
        "x1^2+x2^2",
        "--a",
        "0.5",
        "--b",
        "2",
        "--res",
        "64",
    ]);
    let b = gmt(&[
        "coarea",
        "--h",
        "x1^2+x2^2",
        "--a",
        "0.5",
        "--b",
        "2",
        "--res",
        "64",
        "--threads",
        "3",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_seed_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_gmt"))
        .args(["area", &scene("circle.json")])
        .env("GMT_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
