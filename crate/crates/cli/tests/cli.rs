use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qwalk::distribution::{Distribution, Distribution2D, GridSidecar};
use qwalk::walk1d::drift_tolerance;
use serde_json::Value;

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).env_remove("QWALK_OUT").output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    qwalk(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr is one JSON object")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walk(dir)
        .into_iter()
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            v.extend(walk(&p));
        } else {
            v.push(p);
        }
    }
    v
}

#[test]
fn walk1d_writes_normalized_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["walk1d", "--n", "1000"]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(dir.path().join("quantum-1d_n1000.csv")).unwrap();
    let d = Distribution::from_csv(&text).unwrap();
    assert_eq!(d.n_steps(), 1000);
    assert!((d.total() - 1.0).abs() <= drift_tolerance(1000));
}

#[test]
fn checkpoints_and_classical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["walk1d", "--n", "30", "--checkpoints", "10,20"]).status.success());
    for n in [10, 20, 30] {
        assert!(dir.path().join(format!("quantum-1d_n{n}.csv")).exists());
    }
    assert!(run_in(dir.path(), &["walk1d", "--n", "8", "--classical"]).status.success());
    let d = Distribution::from_csv(&fs::read_to_string(dir.path().join("classical-1d_n8.csv")).unwrap()).unwrap();
    assert_eq!(d.prob_at(0), 70.0 / 256.0);
}

#[test]
fn every_file_carries_header() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["walk1d", "--n", "50"]).status.success());
    assert!(run_in(dir.path(), &["walk2d", "--n", "8", "--protocol", "tensor", "--slices"]).status.success());
    assert!(run_in(dir.path(), &["spectrum", "--n", "50"]).status.success());
    assert!(run_in(dir.path(), &["analyze", "--n", "200"]).status.success());
    assert!(run_in(dir.path(), &["reproduce", "table5", "--n", "4"]).status.success());
    let all = files(dir.path());
    assert!(all.len() >= 10);
    for (name, body) in all {
        let text = String::from_utf8(body).unwrap();
        if name.ends_with(".json") {
            let v: Value = serde_json::from_str(&text).unwrap();
            for key in ["tool", "config", "protocol"] {
                assert!(v.get(key).is_some(), "{name} lacks {key}");
            }
        } else {
            for key in ["# tool=qwalk ", "# config=", "# protocol="] {
                assert!(text.contains(key), "{name} lacks {key}");
            }
        }
    }
}

#[test]
fn grid_and_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["walk2d", "--n", "12", "--protocol", "grover"]).status.success());
    let side: GridSidecar =
        serde_json::from_str(&fs::read_to_string(dir.path().join("grover-2d_n12.json")).unwrap()).unwrap();
    assert_eq!((side.n, side.grid_min, side.grid_max), (12, -12, 12));
    let g =
        Distribution2D::from_csv(&fs::read_to_string(dir.path().join("grover-2d_n12.csv")).unwrap(), &side).unwrap();
    assert!((g.total() - 1.0).abs() < 1e-12);
}

#[test]
fn reproduce_table1_reports_published_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["reproduce", "table1", "--n", "1000"]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1/report.json")).unwrap()).unwrap();
    let check = &report["data"]["checks"][0];
    assert_eq!(check["expected"], "[2, 5, 8, 12, 17, 23, 17]");
    let pass = check["pass"].as_bool().unwrap();
    assert_eq!(pass, check["observed"] == check["expected"]);
    assert_eq!(o.status.code(), Some(if pass { 0 } else { 2 }), "{}", stdout(&o));
    assert!(stdout(&o).contains("table1 "));
    assert!(dir.path().join("table1/distribution_n1000.csv").exists());
}

#[test]
fn reproduce_table5_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["reproduce", "table5", "--n", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(
        "PASS N=7 pseudobinomial row: observed [1, 37, 261, 625, 625, 261, 37, 1] expected [1, 37, 261, 625, 625, 261, 37, 1]"
    ));
    let table = fs::read_to_string(dir.path().join("table5/table5.csv")).unwrap();
    assert!(table.ends_with("7,1 7 21 35 35 21 7 1,1 37 261 625 625 261 37 1\n"), "{table}");
}

#[test]
fn precondition_errors_exit_one_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["reproduce", "table9"], "parse"),
        (&["walk2d", "--n", "1001"], "n_too_large"),
        (&["walk1d", "--n", "10", "--checkpoints", "11"], "checkpoint_out_of_range"),
        (&["reproduce", "table1", "--n", "500"], "insufficient_data"),
        (&["walk1d"], "usage"),
    ];
    for (args, kind) in cases {
        let o = run_in(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let e = error_json(&o);
        assert_eq!(e["error"], kind, "{args:?}: {e}");
        assert!(e["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(["walk1d", "--n", "4"])
        .env("QWALK_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("quantum-1d_n4.csv").exists());
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|t| {
            let dir = tempfile::tempdir().unwrap();
            for args in [
                &["walk1d", "--n", "700"][..],
                &["walk2d", "--n", "40", "--protocol", "aqw", "--slices"],
                &["spectrum", "--n", "40", "--protocol", "tensor"],
            ] {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                assert!(run_in(dir.path(), &a).status.success());
            }
            files(dir.path())
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_hash_tracks_inputs() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["walk1d", "--n", "10"]);
    run_in(dir.path(), &["walk1d", "--n", "12"]);
    let hash = |n: u32| {
        let text = fs::read_to_string(dir.path().join(format!("quantum-1d_n{n}.csv"))).unwrap();
        text.lines().find_map(|l| l.strip_prefix("# config=")).unwrap().to_string()
    };
    assert_ne!(hash(10), hash(12));
}

#[test]
fn oracle_and_analysis_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["oracle", "--n", "100", "--compare", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["max_relative_error"].as_f64().unwrap() <= 1e-5);

    assert!(run_in(dir.path(), &["walk1d", "--n", "1000"]).status.success());
    let input = dir.path().join("quantum-1d_n1000.csv");
    let o = run_in(dir.path(), &["analyze", "--input", input.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{o:?}");
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["n"], 1000);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("analysis_n1000.json")).unwrap()).unwrap();
    assert_eq!(report["data"]["windows"].as_array().unwrap().len(), 7);
}
