use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixsing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_measure(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn classify_s0_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_measure(dir.path(), "g.json", r#"{"family":"skew_normal","atoms":[[0,1,1],[1,2,-1]],"weights":[0.5,0.5]}"#);
    let o = run(&["classify", &good]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["label"], "S0");
    assert_eq!(v["level"]["exact"], 0);

    let near = write_measure(dir.path(), "n.json", r#"{"family":"skew_normal","atoms":[[0,1,1e-9],[1,2,-1]],"weights":[0.5,0.5]}"#);
    assert_eq!(run(&["classify", &near]).status.code(), Some(2));

    let bad = write_measure(dir.path(), "b.json", r#"{"family":"skew_normal","atoms":[[0,1,1],[1,2,-1]],"weights":[0.5,0.6]}"#);
    let o = run(&["classify", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "BadWeights");
}

#[test]
fn classify_overfitted_skew() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_measure(dir.path(), "g.json", r#"{"family":"skew_normal","atoms":[[0,1,1]],"weights":[1]}"#);
    let v = stdout_json(&run(&["classify", &g, "--setting", "o", "--k", "2"]));
    assert_eq!(v["aux"]["R"], 4);
    assert_eq!(v["level"]["bound"], 3);
}

#[test]
fn polysys_verdicts() {
    let v = stdout_json(&run(&["polysys", "--system", "skew", "--l", "1", "--r", "4"]));
    assert_eq!(v["verdict"], "unsolvable");
    let v = stdout_json(&run(&["polysys", "--system", "skew", "--l", "1", "--r", "3", "--m", "-2"]));
    assert_eq!(v["verdict"], "solvable");
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    let v = stdout_json(&run(&["polysys", "--system", "gaussian", "--l", "1", "--ladder"]));
    assert_eq!(v["ladder"]["value"], 4);
}

#[test]
fn reduce_prints_third_order_table() {
    let o = run(&["reduce", "--order", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("d(0,2,1) = [(m^4 + 2*m^2 + 1)/(4*m^2*v^2)] d(0,0,3)"));
    let rows: Value = serde_json::from_slice(&run(&["reduce", "--json"]).stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 10);
}

#[test]
fn distance_variants() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_measure(dir.path(), "a.json", r#"{"family":"skew_normal","atoms":[[0,1,0]],"weights":[1]}"#);
    let b = write_measure(dir.path(), "b.json", r#"{"family":"skew_normal","atoms":[[1,1,0]],"weights":[1]}"#);
    let v = stdout_json(&run(&["distance", &a, &b, "--order", "1"]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let o = run(&["distance", &a, &b, "--kappa", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "IndexMismatch");
}

#[test]
fn sample_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_measure(dir.path(), "g.json", r#"{"family":"gaussian","atoms":[[-2,1],[2,1.5]],"weights":[0.4,0.6]}"#);
    let data = dir.path().join("x.txt");
    let o = run(&["sample", &g, "--n", "3000", "--seed", "4", "-o", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let again = dir.path().join("y.txt");
    run(&["sample", &g, "--n", "3000", "--seed", "4", "-o", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());

    let fit = stdout_json(&run(&["fit", data.to_str().unwrap(), "--family", "gaussian", "--k", "2"]));
    let m = &fit["measure"];
    assert_eq!(m["family"], "gaussian");
    let atoms = m["atoms"].as_array().unwrap();
    assert!((atoms[0][0].as_f64().unwrap() + 2.0).abs() < 0.2);
    assert!((atoms[1][0].as_f64().unwrap() - 2.0).abs() < 0.2);
}

#[test]
fn witness_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_measure(dir.path(), "g.json", r#"{"family":"skew_normal","atoms":[[0,1,1]],"weights":[1]}"#);
    let csv = dir.path().join("w.csv");
    let v = stdout_json(&run(&["witness", "--kind", "s0", &g, "--csv", csv.to_str().unwrap()]));
    assert_eq!(v["order"], 3);
    assert!(v["ratios"][0]["decay"].as_f64().unwrap() >= 10.0);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,s,W_s,sup_ratio");
    assert_eq!(text.lines().count(), 1 + 2 * 7);
}

#[test]
fn unknown_preset_and_thread_override() {
    let o = run(&["rate-study", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().env("MIXSING_JOBS", "1").args(["reduce", "--order", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}
