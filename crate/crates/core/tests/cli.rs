//! End-to-end runs of the `spcr` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spcr"))
        .args(args)
        .env("SPCR_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn simulate(dir: &Path) {
    let out = spcr(&[
        "simulate",
        "--case",
        "1a",
        "--n",
        "40",
        "--seed",
        "3",
        "--out-dir",
        s(dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn single_replication_bench_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let out = spcr(&[
        "bench",
        "--cases",
        "1a",
        "--R",
        "1",
        "--seed",
        "0",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    let report = json(&dir.path().join("bench.json"));
    assert!(report["manifest"]["version"].is_string());
    assert_eq!(report["report"]["seeds"], serde_json::json!([0]));
}

#[test]
fn three_methods_get_three_blocks() {
    let dir = TempDir::new().unwrap();
    let out = spcr(&[
        "bench",
        "--cases",
        "2",
        "--methods",
        "spcr,aspcr,pcr",
        "--R",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for m in ["spcr", "aspcr", "pcr"] {
        assert!(
            csv.lines().skip(1).any(|l| l.split(',').any(|f| f == m)),
            "{m} missing"
        );
    }
}

#[test]
fn unknown_case_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let out = spcr(&[
        "bench",
        "--cases",
        "9z",
        "--R",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9z"));
}

#[test]
fn response_only_csv_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("y.csv");
    fs::write(&input, "y\n1\n2\n3\n").unwrap();
    let out = spcr(&[
        "fit",
        "--input",
        s(&input),
        "--k",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_names_the_cell() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "a,b,y\n1,2,3\n4,oops,6\n").unwrap();
    let out = spcr(&[
        "fit",
        "--input",
        s(&input),
        "--k",
        "1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, column 2"), "{err}");
}

#[test]
fn huge_penalty_gives_the_mean_model() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path());
    let train = dir.path().join("train.csv");
    let out = spcr(&[
        "fit",
        "--input",
        s(&train),
        "--k",
        "2",
        "--lambda-beta",
        "1e12",
        "--lambda-gamma",
        "1e12",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = json(&dir.path().join("model.json"));
    let body = fs::read_to_string(&train).unwrap();
    let ys: Vec<f64> = body
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    assert!((m["model"]["gamma0"].as_f64().unwrap() - ybar).abs() < 1e-10);
    assert!(m["composite"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn seeded_cv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path());
    let train = dir.path().join("train.csv");
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = spcr(&[
            "cv",
            "--input",
            s(&train),
            "--k",
            "1",
            "--seed",
            "7",
            "--out-dir",
            s(&out_dir),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    let strip = |p: &Path| {
        let mut v = json(p);
        v["manifest"]["command"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&a.join("cv.json")), strip(&b.join("cv.json")));
    assert_eq!(strip(&a.join("model.json")), strip(&b.join("model.json")));
}

#[test]
fn grid_spacing_is_recorded() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path());
    let train = dir.path().join("train.csv");
    for grid in ["linear", "log"] {
        let out_dir = dir.path().join(grid);
        let out = spcr(&[
            "cv",
            "--input",
            s(&train),
            "--k",
            "1",
            "--grid",
            grid,
            "--out-dir",
            s(&out_dir),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = json(&out_dir.join("cv.json"));
        assert_eq!(v["cv"]["spacing"], grid);
        assert_eq!(v["manifest"]["command"]["Cv"]["grid"], grid);
    }
}

#[test]
fn predict_round_trip() {
    let dir = TempDir::new().unwrap();
    simulate(dir.path());
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    let out = spcr(&[
        "cv",
        "--input",
        s(&train),
        "--k",
        "1",
        "--adaptive",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = spcr(&[
        "predict",
        "--model",
        s(&dir.path().join("model.json")),
        "--input",
        s(&test),
        "--response",
        "y",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let preds = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1001);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mse: f64 = stdout.trim().strip_prefix("mse ").unwrap().parse().unwrap();
    assert!(mse < 0.05, "mse {mse}");
    let digests = json(&dir.path().join("predict.json"))["manifest"]["input_digests"].clone();
    assert_eq!(digests.as_object().unwrap().len(), 2);
}
