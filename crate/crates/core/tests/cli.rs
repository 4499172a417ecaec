//! End-to-end runs of the `phase-oracle` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phase-oracle"))
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_to(scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn dj_case_b_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let res = run_to(
        &scenarios_dir().join("dj_zero_phase_case_b.json"),
        &out,
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["summary"]["mean_probability"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["records"][0]["verdict"], "B");
    assert_eq!(v["records"][0]["oracle_calls"], 2);
    assert_eq!(v["records"][0]["protocol"], "dj");
}

#[test]
fn single_record_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let res = run_to(
        &scenarios_dir().join("dj_zero_phase_case_a.json"),
        &out,
        &[],
    );
    assert!(res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2);
    assert!(data[0].starts_with("scenario,trial,n,regime,inner_re"));
    assert!(data[1].contains(",A,2,"));
    assert!(text.contains("# summary"));
}

#[test]
fn random_phase_run_is_reproducible_and_fails_as_predicted() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("dj_random_phase_failure.json");
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    assert!(run_to(&scenario, &first, &[]).status.success());
    assert!(run_to(&scenario, &second, &[]).status.success());
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());

    let text = String::from_utf8(a).unwrap();
    let data = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data, 1000);
    let field = |key: &str| -> f64 {
        let prefix = format!("# {key}: ");
        text.lines()
            .find_map(|l| l.strip_prefix(&prefix))
            .unwrap()
            .parse()
            .unwrap()
    };
    let mean = field("mean_probability");
    let stderr = field("stderr_probability");
    assert!((mean - 2f64.powi(-8)).abs() <= 3.0 * stderr);

    // a different seed gives different records
    let third = dir.path().join("third.csv");
    assert!(run_to(&scenario, &third, &["--seed", "7"]).status.success());
    assert_ne!(fs::read(&third).unwrap(), fs::read(&first).unwrap());
}

#[test]
fn trials_flag_and_seed_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let res = run_to(
        &scenarios_dir().join("dj_inverse_rescue.json"),
        &out,
        &["--trials", "5", "--format", "csv"],
    );
    assert!(res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[7], "B");
        assert!(!cols[9].is_empty(), "stochastic runs record their seed");
    }
}

#[test]
fn readout_over_shipped_halting_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("readout.json");
    let res = run_to(
        &scenarios_dir().join("readout_halting_table.json"),
        &out,
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let table: Value = serde_json::from_str(
        &fs::read_to_string(scenarios_dir().join("data/halting_n6_b1000.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["summary"]["recovered_h"], table["h"]);
    assert_eq!(v["records"].as_array().unwrap().len(), 63);
}

#[test]
fn halting_demo_writes_table_next_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo.json");
    assert!(
        run_to(&scenarios_dir().join("halting_demo.json"), &out, &[])
            .status
            .success()
    );
    let exported = fs::read_to_string(dir.path().join("halting_n6_b1000.json")).unwrap();
    let shipped = fs::read_to_string(scenarios_dir().join("data/halting_n6_b1000.json")).unwrap();
    assert_eq!(exported, shipped);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["classical_all_zero"], true);
    assert_eq!(v["summary"]["h_matches"], true);
}

#[test]
fn every_shipped_scenario_runs() {
    let mut protocols = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let out = dir.path().join(path.file_name().unwrap());
        let res = run_to(&path, &out, &[]);
        assert!(
            res.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&res.stderr)
        );
        let cfg: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        protocols.push(cfg["protocol"].as_str().unwrap().to_string());
    }
    for needed in [
        "dj",
        "readout",
        "classical_sweep",
        "lower_bound",
        "halting_demo",
    ] {
        assert!(
            protocols.iter().any(|p| p == needed),
            "no {needed} scenario"
        );
    }
}

#[test]
fn invalid_config_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "bad.json",
        "{\n  \"name\": \"bad\",\n  \"n\": 3,\n  \"protocol\": \"grover\"\n}\n",
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn semantic_errors_point_at_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "seedless.json",
        r#"{
  "name": "seedless",
  "n": 2,
  "protocol": "dj",
  "oracle": {"n": 2, "f": "1111", "phases": {"kind": "uniform_random"}}
}
"#,
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("seedless.json:5:"), "{err}");
    assert!(err.contains("seed"), "{err}");

    // seed from the command line satisfies the requirement
    let res = run(&["run", "--scenario", path.to_str().unwrap(), "--seed", "3"]);
    assert!(res.status.success());
}

#[test]
fn missing_oracle_file_and_width_limit() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "missing.json",
        r#"{"name": "m", "n": 2, "protocol": "dj", "oracle": {"file": "nope.json"}}"#,
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("does not exist"));

    let path = write_scenario(
        dir.path(),
        "wide.json",
        r#"{"name": "w", "n": 4, "protocol": "lower_bound"}"#,
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(!res.status.success());

    let path = write_scenario(
        dir.path(),
        "nmax.json",
        r#"{"name": "w", "n": 3, "protocol": "dj", "oracle": {"n": 3, "f": "11111111", "phases": {"kind": "zero"}}}"#,
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap(), "--n-max", "2"]);
    assert!(!res.status.success());
}

#[test]
fn oracle_file_reference() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("oracle.json"),
        r#"{"n": 2, "f": "0000", "phases": {"kind": "encode_function", "h": "1101"}}"#,
    )
    .unwrap();
    let path = write_scenario(
        dir.path(),
        "ref.json",
        r#"{"name": "r", "n": 2, "protocol": "readout", "oracle": {"file": "oracle.json"}, "z": 1}"#,
    );
    let out = dir.path().join("out.json");
    let res = run_to(&path, &out, &[]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["recovered_h"], "1101");
    assert_eq!(v["summary"]["z"], 1);
}

#[test]
fn readout_rejects_bad_special_string() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "z.json",
        r#"{"name": "z", "n": 2, "protocol": "readout", "z": 2,
  "oracle": {"n": 2, "f": "0000", "phases": {"kind": "encode_function", "h": "1101"}}}"#,
    );
    let res = run(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("h(z) = 1"));
}

#[test]
fn dump_state_emits_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    let res = run_to(
        &scenarios_dir().join("dj_zero_phase_case_a.json"),
        &out,
        &["--dump-state"],
    );
    assert!(res.status.success());
    let stderr = String::from_utf8(res.stderr).unwrap();
    let line: Value = serde_json::from_str(stderr.lines().next().unwrap()).unwrap();
    assert_eq!(line["state"]["n"], 3);
    assert_eq!(line["state"]["amplitudes"].as_array().unwrap().len(), 16);
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = run_to(
        &scenarios_dir().join("dj_zero_phase_case_a.json"),
        &blocker.join("out.csv"),
        &[],
    );
    assert!(!res.status.success());
}

#[test]
fn lower_bound_certificates_recheck() {
    use phase_oracle::classical::{check_tree, DecisionTree};
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lb.json");
    assert!(run_to(&scenarios_dir().join("lower_bound.json"), &out, &[])
        .status
        .success());
    let certs: Vec<Value> = serde_json::from_str(
        &fs::read_to_string(dir.path().join("lower_bound_certificates.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(certs.len(), 3);
    for cert in certs {
        let n = cert["n"].as_u64().unwrap() as u32;
        let tree: DecisionTree = serde_json::from_value(cert["certificate"].clone()).unwrap();
        let check = check_tree(&tree, n).unwrap();
        assert!(check.is_valid());
        assert_eq!(u64::from(check.depth), cert["queries"].as_u64().unwrap());
    }
}

#[test]
fn shots_sampling_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    let res = run_to(
        &scenarios_dir().join("dj_zero_phase_case_a.json"),
        &out,
        &["--shots", "50"],
    );
    assert!(res.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["records"][0]["shots"], 50);
    assert_eq!(v["records"][0]["shots_yes"], 50);
}
