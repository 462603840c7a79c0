use std::process::Command;
use std::time::Instant;

use serde_json::Value;

fn qcpline(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qcpline")).args(args).output().expect("binary runs")
}

const SMALL: [&str; 6] = ["--n", "96", "--margin", "24", "--k", "16"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL).collect()
}

#[test]
fn verify_symbolic_is_fast_and_passes() {
    let start = Instant::now();
    let out = qcpline(&["verify-symbolic"]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["symbolic"].as_array().unwrap().iter().all(|c| c["proven"] == true));
}

#[test]
fn q_below_one_is_usage_error() {
    assert_eq!(qcpline(&["report", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(qcpline(&["report", "--bogus"]).status.code(), Some(2));
}

#[test]
fn reference_report_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = qcpline(&["report", "--q", "2", "--c", "1", "--n", "256", "--k", "40", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for field in [
        "params",
        "symbolic",
        "eigenvalues",
        "weights",
        "gram_max_dev",
        "intertwine_residual",
        "symbols",
        "winding",
        "pullback_pass",
        "h0_probe",
        "gauge",
    ] {
        assert!(doc.get(field).is_some(), "missing {field}");
    }
    assert_eq!(doc["pullback_pass"], true);
    assert!(doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));

    let row = &doc["eigenvalues"][1];
    assert_eq!(row["k"], 2);
    assert_eq!(row["formula"].as_f64(), Some(2.0));
    assert!(row["residual"].as_f64().unwrap() < 1e-8);
    let w = &doc["weights"][0];
    assert!((w["formula"].as_f64().unwrap() - 0.968246).abs() < 1e-6);
    let pair = &doc["symbols"][0]["operators"][0]["subspaces"]["H1"]["1"];
    assert!((pair[0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(pair[1].is_number());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let args = with_small(&["decompose", "--q", "2,3", "--c", "0.5,1", "-o", p.to_str().unwrap()]);
        assert_eq!(qcpline(&args).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let doc: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    let qs: Vec<f64> = doc["runs"].as_array().unwrap().iter().map(|r| r["q"].as_f64().unwrap()).collect();
    assert_eq!(qs, vec![2.0, 2.0, 3.0, 3.0]);
}

#[test]
fn empty_grid_is_valid_document() {
    let out = qcpline(&["report", "--c", ""]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["eigenvalues"], Value::Array(vec![]));
    assert_eq!(doc["runs"], Value::Array(vec![]));
}

#[test]
fn csv_tables() {
    let out = qcpline(&with_small(&["weights", "--format", "csv"]));
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["table", "q", "c", "t1_angle", "k", "formula", "measured", "residual"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 14);
    assert_eq!(&rows[0][0], "weight");
    assert!(rows[0][5].len() >= 17);
    assert!((rows[0][5].parse::<f64>().unwrap() - 0.968246).abs() < 1e-6);
}

#[test]
fn unwritable_output_is_io_error() {
    let out = qcpline(&["verify-symbolic", "-o", "/nonexistent-dir/report.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unreliable_symbols_fail_the_check() {
    let out = qcpline(&with_small(&["symbol", "--q", "1.2"]));
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["pullback_pass"], false);
}

#[test]
fn subcommands_run() {
    for sub in ["spectrum", "index", "gauge", "h0-probe"] {
        let out = qcpline(&with_small(&[sub]));
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["command"], sub);
    }
}
