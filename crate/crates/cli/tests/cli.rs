use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn morrey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morrey"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn norm_of_unit_interval_matches_closed_form() {
    // On [-1, 1] the best dyadic cube for p = 2, r = -1/4 is the whole
    // support at level 0: 2^0 · √2.
    let out = morrey(&["norm", "chi -1 1", "--space", "2,-0.25", "--points", "128"]);
    let v = stdout_json(&out);
    let dyadic = v["dyadic"]["value"].as_f64().unwrap();
    assert!((dyadic - 2f64.sqrt()).abs() < 1e-12, "{dyadic}");
    assert_eq!(v["dyadic"]["resolution"], 128);
    assert!(v["ball"].is_object());
}

#[test]
fn predual_brackets_the_norm() {
    let out = morrey(&["predual", "bump 0 1", "--space", "2,-0.75", "--atoms"]);
    let v = stdout_json(&out);
    let upper = v["upper"].as_f64().unwrap();
    let lower = v["certificate"]["lower"].as_f64().unwrap();
    assert!(lower > 0.0 && lower <= upper * (1.0 + 1e-12));
    assert_eq!(v["atoms"].as_array().unwrap().len(), v["atom_count"].as_u64().unwrap() as usize);
}

#[test]
fn predual_rejects_out_of_range_shape() {
    let out = morrey(&["predual", "bump 0 1", "--space", "2,-0.25"]);
    assert!(!out.status.success());
}

#[test]
fn apply_identity_round_trips() {
    let out = morrey(&["apply", r#"{"kind":"identity"}"#, "chi 0 1", "--points", "16", "--half-width", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,re,im"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 16);
    for row in rows {
        let expected = if (0.0..=1.0).contains(&row[0]) { 1.0 } else { 0.0 };
        assert_eq!(row[1], expected, "x = {}", row[0]);
        assert_eq!(row[2], 0.0);
    }
}

#[test]
fn apply_rejects_sub_grid_truncation() {
    let out = morrey(&["apply", r#"{"kind":"hilbert","eps":0.001}"#, "bump 0 1"]);
    assert!(!out.status.success());
}

#[test]
fn bound_ratio_of_identity_is_one() {
    let out = morrey(&[
        "bound-ratio",
        "--op",
        r#"{"kind":"identity"}"#,
        "--function",
        "bump 0 1",
        "--function",
        "gauss 1",
        "--space",
        "2",
    ]);
    let v = stdout_json(&out);
    assert!((v["max_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

fn write_config(dir: &std::path::Path, checks: &str, corpus: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "grid": {{ "dim": 1, "half_width": 8.0, "points_per_axis": 256 }},
  "space": {{ "type": "morrey", "p": 2.0, "r": -0.25 }},
  "corpus": {corpus},
  "checks": {checks},
  "seed": 3,
  "output_path": "{}"
}}"#,
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_writes_reports_and_report_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["dilation_covariance"]"#, r#"["bump 0 1"]"#);
    let out = morrey(&["check", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 passed, 0 failed"));

    let json_path = dir.path().join("out.json");
    let saved: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(saved["records"].as_array().unwrap().len(), 1);
    let csv_file = fs::read_to_string(dir.path().join("out.csv")).unwrap();

    let out = morrey(&["report", json_path.to_str().unwrap(), "--csv"]);
    assert!(out.status.success());
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(printed, csv_file);
    assert!(printed.starts_with("check,function,operator,value,resolution,pass\n"));
}

#[test]
fn check_with_empty_corpus_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["weak_duality"]"#, "[]");
    let out = morrey(&["check", config.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 passed, 0 failed"));
}

#[test]
fn check_rejects_unknown_check_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"["no_such_check"]"#, r#"["bump 0 1"]"#);
    let out = morrey(&["check", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_check"));
    assert!(!dir.path().join("out.json").exists());
}

#[test]
fn shipped_configs_pass() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["line.json", "plane.json"] {
        let dir = tempfile::tempdir().unwrap();
        let out_base = dir.path().join("report");
        let out = morrey(&[
            "check",
            root.join(name).to_str().unwrap(),
            "--output",
            out_base.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(dir.path().join("report.csv").exists());
    }
}
