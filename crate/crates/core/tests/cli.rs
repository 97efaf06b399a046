use std::process::{Command, Output};

use serde_json::Value;

fn minmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmax"))
        .args(args)
        .env_remove("MINMAX_SEED")
        .env_remove("MINMAX_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs())
        }
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| close(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn iterate_matches_golden_file() {
    let out = minmax(&["iterate", "--d", "2", "--boundary", "bernoulli:0.5", "--rounds", "500"]);
    assert!(out.status.success());
    let golden: Value =
        serde_json::from_str(include_str!("golden/iterate_d2_bernoulli_half_r500.json")).unwrap();
    assert!(close(&json(&out), &golden));
}

#[test]
fn iterate_table_row_for_ternary_tree() {
    let v = json(&minmax(&["iterate", "--d", "3"]));
    let p0 = v["pmf"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["value"] == 0)
        .unwrap()["prob"]
        .as_f64()
        .unwrap();
    assert!((p0 - 0.642837).abs() < 1e-6);
}

#[test]
fn verify_sweep_exit_codes() {
    let out = minmax(&["verify", "--d", "3..15"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["reports"].as_array().unwrap().len(), 13);
    let out = minmax(&["verify", "--d", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exploratory"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["iterate"][..],
        &["iterate", "--d", "two"],
        &["simulate", "--d", "2"],
        &["nonsense"],
        &["simulate", "--d", "9", "--n", "9", "--samples", "1"],
        &["iterate", "--d", "2", "--format", "xml"],
    ] {
        assert_eq!(minmax(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn output_is_identical_across_threads_and_runs() {
    let base = ["simulate", "--d", "3", "--n", "2", "--samples", "4000", "--seed", "17"];
    let one = minmax(&[&base[..], &["--threads", "1"]].concat());
    let many = minmax(&[&base[..], &["--threads", "4"]].concat());
    let again = minmax(&[&base[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(many.stdout, again.stdout);
}

#[test]
fn seed_can_come_from_the_environment() {
    let args = ["simulate", "--d", "2", "--n", "2", "--samples", "500"];
    let flag = minmax(&[&args[..], &["--seed", "99"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_minmax"))
        .args(args)
        .env("MINMAX_SEED", "99")
        .env("MINMAX_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let other = minmax(&[&args[..], &["--seed", "100"]].concat());
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let args = ["asymptotics", "--d", "6..8"];
    let j = json(&minmax(&args));
    let c = minmax(&[&args[..], &["--format", "csv"]].concat());
    let mut rdr = csv::Reader::from_reader(c.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let jrows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), jrows.len());
    for (row, jr) in rows.iter().zip(jrows) {
        for (name, cell) in header.iter().zip(row) {
            assert_eq!(cell.parse::<f64>().unwrap(), jr[name].as_f64().unwrap(), "{name}");
        }
    }
}

#[test]
fn fixed_family_and_isoperimetry() {
    let v = json(&minmax(&["fixed-family", "--alpha", "0.25", "--half-width", "8"]));
    assert!(v["values"].as_array().unwrap().iter().any(|e| e[0] == 2 && e[1] == 0.75));
    let out = minmax(&["isoperimetry", "--d", "4", "--trials", "1000"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["matches"], 1000);
}

#[test]
fn text_output_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tails.txt");
    let out = minmax(&["tails", "--d", "2..4", "--rounds", "200", "--format", "text", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn scan_and_reproduce_run() {
    let out = minmax(&["scan-boundary", "--d", "10", "--rounds", "300", "--grid", "5", "--tol", "1e-4"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["p_c"].as_f64().unwrap() - v["heuristic_root"].as_f64().unwrap()).abs() < 1e-3);
    let out = minmax(&["reproduce", "--format", "text"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.9722837591"));
}
