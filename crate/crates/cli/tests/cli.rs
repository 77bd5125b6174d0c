use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-recovery"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn cert_on_the_four_atom_dictionary() {
    let out = run(&[
        "cert", "--dict", "example1", "--theta1", "0.2618", "--theta2", "0.7854", "--qstar", "0,1", "--q", "0", "--alg",
        "omp",
    ]);
    let v = json_stdout(&out);
    let factor = v["report"]["aggregate"].as_f64().unwrap();
    assert!((factor - 1.3660).abs() < 1e-3, "{factor}");
    assert_eq!(v["config"]["qstar"], serde_json::json!([0, 1]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim_start().starts_with("{\n  \"config\""));
}

#[test]
fn cert_conditions() {
    let base = ["cert", "--dict", "example1", "--qstar", "0,1"];
    let erc = json_stdout(&run(&[&base[..], &["--condition", "erc"]].concat()));
    let brc = json_stdout(&run(&[&base[..], &["--condition", "brc"]].concat()));
    let card = json_stdout(&run(&[&base[..], &["--condition", "cardinality", "--cardinality", "1", "--alg", "ols"]].concat()));
    assert_eq!(erc["report"]["kind"], "erc");
    assert_eq!(brc["report"]["verdict"], true);
    assert_eq!(card["report"]["algorithm"], "OLS");
}

#[test]
fn greedy_trace_has_status() {
    let v = json_stdout(&run(&["greedy", "--alg", "ols", "--dict", "gaussian", "--m", "50", "--n", "100", "--k", "5", "--seed", "7"]));
    assert!(v["trace"]["status"]["kind"].is_string());
    assert_eq!(v["support"].as_array().unwrap().len(), 5);
}

#[test]
fn construct_and_checks() {
    let v = json_stdout(&run(&["construct", "--dict", "example1", "--qstar", "0,1", "--q", "0", "--alg", "omp"]));
    // One true atom left: the OLS certificate holds, so no failing input exists.
    let ols = run(&["construct", "--dict", "example1", "--qstar", "0,1", "--q", "0", "--alg", "ols"]);
    assert_eq!(ols.status.code(), Some(2));
    assert_eq!(v["failure"]["trace"]["iterations"][0]["selected"], 0);
    let reach = json_stdout(&run(&["construct", "--dict", "gaussian", "--m", "10", "--n", "20", "--qstar", "0,1,2", "--q", "2,0", "--reach-only"]));
    assert_eq!(reach["y"].as_array().unwrap().len(), 10);
    let bp = json_stdout(&run(&["bp-check", "--dict", "gaussian", "--m", "3", "--n", "5", "--qstar", "0,1"]));
    assert!(bp["nsp"]["holds"].is_boolean());
    let spark = json_stdout(&run(&["spark", "--dict", "example1"]));
    assert_eq!(spark["spark"], serde_json::json!({"kind": "exact", "size": 4}));
}

#[test]
fn matrix_file_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.txt");
    fs::write(&path, "3 0 1\n4 1 0\n").unwrap();
    let p = path.to_str().unwrap();
    let rejected = run(&["spark", "--dict", "file", "--matrix-file", p]);
    assert_eq!(rejected.status.code(), Some(2));
    let v = json_stdout(&run(&["spark", "--dict", "file", "--matrix-file", p, "--normalize"]));
    assert_eq!(v["spark"]["size"], 3);
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn phase_curve_files_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&[
        "phase-curve", "--dict", "hybrid", "--t-max", "10", "--m", "30", "--n", "60", "--k", "6", "--trials", "20",
        "--seed", "5", "--workers", "1", "--out-dir", d,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "phase-curve_seed5.csv");
    let json = read(dir.path(), "phase-curve_seed5.json");
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# {\"experiment\":\"phase-curve\""));
    assert_eq!(lines.next().unwrap(), "q,rate_omp,rate_ols");
    assert_eq!(csv.lines().count(), 2 + 6);
    assert!(!csv.contains('\r'));

    for (source, name) in [("csv", "phase-curve_seed5.csv"), ("json", "phase-curve_seed5.json")] {
        let again = dir.path().join(source);
        let cfg = dir.path().join(name);
        let out = run(&[
            "phase-curve", "--config", cfg.to_str().unwrap(), "--workers", "4", "--out-dir", again.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert_eq!(read(&again, "phase-curve_seed5.csv"), csv);
        assert_eq!(read(&again, "phase-curve_seed5.json"), json);
    }
}

#[test]
fn every_experiment_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["scatter", "--m", "20", "--n", "6", "--k", "5", "--trials", "10"], "scatter_seed1"),
        (&["phase-diagram", "--m", "20", "--n-grid", "30,40", "--k-grid", "2,4", "--trials", "3"], "phase-diagram_seed1"),
        (&["f-vs-q", "--n", "60", "--sigma", "2", "--k", "3"], "f-vs-q"),
        (&["brc-map", "--m-grid", "4,8", "--n-grid", "20", "--trials", "5"], "brc-map_seed1"),
        (&["brc-sigma", "--n", "60", "--sigmas", "1,2", "--spacings", "1,2"], "brc-sigma"),
    ];
    for (args, stem) in cases {
        let out = bin().args(args).args(["--out-dir", d]).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(read(dir.path(), &format!("{stem}.csv")).starts_with("# {"));
        let v: Value = serde_json::from_str(&read(dir.path(), &format!("{stem}.json"))).unwrap();
        assert!(v["config"].is_object() && v["rows"].is_array());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["cert", "--qstar", "0,500"]).status.code(), Some(2));
    assert_eq!(run(&["cert", "--qstar", "0", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["scatter", "--n", "30"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("sub");
    let io = run(&["f-vs-q", "--n", "40", "--sigma", "1", "--k", "2", "--out-dir", nested.to_str().unwrap()]);
    assert_eq!(io.status.code(), Some(3));
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["scatter", "--config", missing.to_str().unwrap()]).status.code(), Some(3));

    // A config of another kind is a configuration error.
    let out = run(&["f-vs-q", "--n", "40", "--sigma", "1", "--k", "2", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let cfg = dir.path().join("f-vs-q.csv");
    assert_eq!(run(&["scatter", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let subcommands = [
        "cert", "greedy", "construct", "scatter", "phase-curve", "phase-diagram", "f-vs-q", "brc-map", "brc-sigma",
        "bp-check", "spark",
    ];
    for sub in subcommands {
        let out = run(&[sub, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("[default: "), "{sub}");
    }
    let text = String::from_utf8(run(&["cert", "--help"]).stdout).unwrap();
    assert!(text.contains("radians") && text.contains("[default: 1]"));
}
