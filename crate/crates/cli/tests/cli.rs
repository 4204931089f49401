use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pwcr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwcr"))
        .args(args)
        .env("PWCR_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn examples_writes_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = pwcr(&["examples"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("mid_bdd"));
    let rows = json(&dir.path().join("examples.json"));
    assert_eq!(rows.as_array().unwrap().len(), 9);
    let manifest = json(&dir.path().join("examples.json.manifest.json"));
    assert_eq!(manifest["config"]["command"], "examples");
}

#[test]
fn coverage_from_config_file_appends_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command":"coverage","scenario":"abs_sine_1d","n":30,"points":[101],"R":10,"B":200,"seed":4}"#,
    )
    .unwrap();
    for _ in 0..2 {
        let o = pwcr(&["--config", cfg.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rep = json(&dir.path().join("coverage.json"));
    assert_eq!(rep["R"], 10);
    assert_eq!(rep["B"], 200);
    let csv = std::fs::read_to_string(dir.path().join("coverage.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("scenario,alpha"));
    assert_eq!(lines[1], lines[2]);
}

#[test]
fn invalid_alpha_exits_with_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pwcr(
        &["coverage", "--scenario", "abs_sine_1d", "--alpha", "1.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    assert_eq!(err["field"], "alpha");
    assert!(!dir.path().join("coverage.json").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"command":"examples","alpah":0.1}"#).unwrap();
    let o = pwcr(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_identical_across_worker_counts() {
    let args = |w: &'static str| {
        vec![
            "regions",
            "--scenario",
            "symdiff_venn_2d",
            "--n",
            "30",
            "-B",
            "200",
            "--seed",
            "3",
            "--workers",
            w,
        ]
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(pwcr(&args("1"), a.path()).status.success());
    assert!(pwcr(&args("3"), b.path()).status.success());
    for name in [
        "lower.csv",
        "upper.csv",
        "report.json",
        "boundaries.csv",
        "geometry_N.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let cov = |w: &'static str, d: &Path| {
        pwcr(
            &[
                "coverage",
                "--scenario",
                "conj_shift_1d",
                "--n",
                "20",
                "-R",
                "6",
                "-B",
                "100",
                "--workers",
                w,
            ],
            d,
        )
    };
    assert!(cov("1", a.path()).status.success());
    assert!(cov("4", b.path()).status.success());
    assert_eq!(
        std::fs::read(a.path().join("coverage.json")).unwrap(),
        std::fs::read(b.path().join("coverage.json")).unwrap()
    );
}

#[test]
fn regions_from_replicate_files() {
    let dir = tempfile::tempdir().unwrap();
    // Ten replicates of a clear step around 0 on an 11-point line.
    let mut text = String::new();
    for r in 0..10 {
        let row: Vec<String> = (0..11)
            .map(|k| format!("{}", (k as f64 - 5.0) + 0.01 * ((r * 7 + k) % 5) as f64))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let input = dir.path().join("reps.csv");
    std::fs::write(&input, text).unwrap();
    let cfg = dir.path().join("run.json");
    let body = serde_json::json!({
        "command": "regions",
        "inputs": [input],
        "grid": {"extents": [[0.0, 1.0]], "points": [11]},
        "application": "absolute",
        "B": 200,
        "format": "rle-json"
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let o = pwcr(&["--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["B"], 200);
    assert!(report["q"].as_f64().unwrap() >= 0.0);
    assert!(dir.path().join("upper.json").exists());
}

#[test]
fn single_point_quantile() {
    let dir = tempfile::tempdir().unwrap();
    let o = pwcr(
        &[
            "quantile",
            "--scenario",
            "abs_sine_1d",
            "--point",
            "100",
            "--stat",
            "sup",
            "--studentize",
            "-B",
            "2000",
            "--alpha",
            "0.05",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = json(&dir.path().join("quantile.json"))["q"]
        .as_f64()
        .unwrap();
    assert!((1.45..1.85).contains(&q), "{q}");
    let samples = std::fs::read_to_string(dir.path().join("sup_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 2001);
}
