use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use mtlmon::fixtures::Fault;
use mtlmon::spec::{parse_spec, RequirementClass};
use serde_json::Value as Json;
use tempfile::TempDir;

fn mtlmon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlmon"))
        .args(args)
        .output()
        .unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mtlmon"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixtures() -> TempDir {
    let dir = TempDir::new().unwrap();
    let o = mtlmon(&["fixtures", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn check(dir: &Path, trace: &str, extra: &[&str]) -> Output {
    let spec = path(dir, "autoclave.spec");
    let trace = path(dir, trace);
    let mut args = vec!["check", "--spec", &spec, "--trace", &trace];
    args.extend_from_slice(extra);
    mtlmon(&args)
}

#[test]
fn fixtures_writes_the_bundle() {
    let dir = fixtures();
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "autoclave.spec",
            "clean.csv",
            "expected.json",
            "level_bias.csv",
            "measurement_failure.csv",
            "sensor_bias.csv",
            "stuck_valve.csv"
        ]
    );
    let expected: Json =
        serde_json::from_str(&fs::read_to_string(dir.path().join("expected.json")).unwrap())
            .unwrap();
    assert_eq!(expected.as_array().unwrap().len(), 5);
    assert_eq!(expected[0]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn fixture_spec_has_the_case_study_class_counts() {
    let dir = fixtures();
    let text = fs::read_to_string(dir.path().join("autoclave.spec")).unwrap();
    let set = parse_spec(&text).unwrap();
    let count = |c| set.requirements.iter().filter(|r| r.class == c).count();
    assert_eq!(set.len(), 26);
    assert_eq!(count(RequirementClass::Limit), 20);
    assert_eq!(count(RequirementClass::TimedOrder), 5);
    assert_eq!(count(RequirementClass::DelayedOrder), 1);
    let delayed = set
        .requirements
        .iter()
        .find(|r| r.class == RequirementClass::DelayedOrder)
        .unwrap();
    assert!(delayed.source_text.contains("30") && delayed.source_text.contains("60"));
}

#[test]
fn throughput_events_are_optional() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nested");
    let o = mtlmon(&[
        "fixtures",
        "--out",
        out.to_str().unwrap(),
        "--throughput-events",
        "50",
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("throughput.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn clean_trace_passes() {
    let dir = fixtures();
    let o = check(dir.path(), "clean.csv", &["--fail-on-violation"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0 of 26"));
}

#[test]
fn fault_traces_fail_with_the_documented_violations() {
    let dir = fixtures();
    for fault in Fault::ALL {
        let trace = format!("{}.csv", fault.name());
        let o = check(
            dir.path(),
            &trace,
            &["--fail-on-violation", "--report", "json"],
        );
        assert_eq!(o.status.code(), Some(1), "{}", fault.name());
        let report: Json = serde_json::from_str(&stdout(&o)).unwrap();
        let mut found: Vec<(String, f64)> = report["requirements"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|r| r["verdict"] == "violated")
            .map(|r| {
                (
                    r["name"].as_str().unwrap().into(),
                    r["violation_time"].as_f64().unwrap(),
                )
            })
            .collect();
        let mut expected: Vec<(String, f64)> = fault
            .expected()
            .iter()
            .map(|v| (v.requirement.into(), v.time))
            .collect();
        found.sort_by(|a, b| a.0.cmp(&b.0));
        expected.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(found, expected, "{}", fault.name());
        assert_eq!(report["summary"]["violated"], expected.len());
    }
}

#[test]
fn violations_without_the_flag_exit_zero() {
    let dir = fixtures();
    let o = check(dir.path(), "sensor_bias.csv", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("violations: 1 of 26"));
}

#[test]
fn json_report_has_a_stable_shape() {
    let dir = fixtures();
    let o = check(dir.path(), "measurement_failure.csv", &["--report", "json"]);
    let report: Json = serde_json::from_str(&stdout(&o)).unwrap();
    let keys: Vec<_> = report.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["requirements", "summary"]);
    for r in report["requirements"].as_array().unwrap() {
        let keys: Vec<_> = r.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            ["name", "class", "verdict", "violation_time", "events"]
        );
        assert_eq!(r["events"], 601);
    }
    let summary: Vec<_> = report["summary"]
        .as_object()
        .unwrap()
        .keys()
        .cloned()
        .collect();
    assert_eq!(summary, ["violated", "total", "events_per_second"]);
    assert!(report["requirements"][0]["violation_time"].is_null());
}

#[test]
fn text_and_json_reports_agree() {
    let dir = fixtures();
    for trace in ["clean.csv", "stuck_valve.csv", "level_bias.csv"] {
        let json: Json =
            serde_json::from_str(&stdout(&check(dir.path(), trace, &["--report", "json"])))
                .unwrap();
        let text = stdout(&check(dir.path(), trace, &[]));
        for r in json["requirements"].as_array().unwrap() {
            let name = r["name"].as_str().unwrap();
            let row = text
                .lines()
                .find(|l| l.split_whitespace().next() == Some(name))
                .unwrap();
            let cells: Vec<_> = row.split_whitespace().collect();
            assert_eq!(cells[1], r["class"].as_str().unwrap());
            assert_eq!(cells[2], r["verdict"].as_str().unwrap());
            match r["violation_time"].as_f64() {
                Some(t) => assert_eq!(cells[3].parse::<f64>().unwrap(), t),
                None => assert_eq!(cells[3], "-"),
            }
        }
    }
}

#[test]
fn oracle_check_confirms_the_fixtures() {
    let dir = fixtures();
    let o = check(dir.path(), "stuck_valve.csv", &["--oracle-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stderr(&o).contains("26 requirements agree"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_trace_names_the_path() {
    let dir = fixtures();
    let o = check(dir.path(), "nope.csv", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn spec_errors_point_at_the_source() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, "prop a := x > 1;\nreq r := G (a & b);\n").unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time,x\n0,2\n").unwrap();
    let o = mtlmon(&[
        "check",
        "--spec",
        spec.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.spec:2:"), "{err}");
    assert!(err.contains("`b`"), "{err}");
    assert!(err.contains("req r := G (a & b);"), "{err}");
    assert!(err.contains('^'), "{err}");
}

fn small(dir: &Path) -> PathBuf {
    let spec = dir.join("small.spec");
    fs::write(&spec, "prop a := x > 1;\nreq r := G a;\n").unwrap();
    spec
}

#[test]
fn trace_errors_point_at_the_line() {
    let dir = TempDir::new().unwrap();
    let spec = small(dir.path());
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time,x\n0,2\n1,abc\n").unwrap();
    let o = mtlmon(&[
        "check",
        "--spec",
        spec.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("t.csv:3:"), "{err}");
    assert!(err.contains("1,abc"), "{err}");

    let trace = dir.path().join("t.jsonl");
    fs::write(&trace, "{\"time\":1,\"x\":2}\n{\"time\":0,\"x\":2}\n").unwrap();
    let o = mtlmon(&[
        "check",
        "--spec",
        spec.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t.jsonl:2:"), "{}", stderr(&o));
}

#[test]
fn unknown_variables_are_reported() {
    let dir = TempDir::new().unwrap();
    let spec = small(dir.path());
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time,y\n0,2\n").unwrap();
    let o = mtlmon(&[
        "check",
        "--spec",
        spec.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`x`"), "{}", stderr(&o));
}

#[test]
fn traces_stream_from_stdin() {
    let dir = TempDir::new().unwrap();
    let spec = small(dir.path());
    let spec = spec.to_str().unwrap();
    let o = with_stdin(
        &[
            "check",
            "--spec",
            spec,
            "--trace",
            "-",
            "--fail-on-violation",
        ],
        "time,x\n0,2\n1,0.5\n",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated"));
    let o = with_stdin(
        &["check", "--spec", spec, "--trace", "-", "--format", "jsonl"],
        "{\"time\":0,\"x\":2}\n{\"time\":1,\"x\":3}\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0 of 1"));
}

#[test]
fn residual_ceiling_is_enforced() {
    let dir = fixtures();
    let o = check(dir.path(), "clean.csv", &["--residual-ceiling", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = check(dir.path(), "clean.csv", &["--residual-ceiling", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ceiling"), "{}", stderr(&o));
}

#[test]
fn eval_uses_one_based_positions() {
    let dir = fixtures();
    let spec = path(dir.path(), "autoclave.spec");
    let trace = path(dir.path(), "clean.csv");
    let eval = |name: &str, index: &str| {
        mtlmon(&[
            "eval",
            "--spec",
            &spec,
            "--trace",
            &trace,
            "--requirement",
            name,
            "--index",
            index,
        ])
    };
    let o = eval("r_pressure", "1");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "true");
    let o = eval("r_pressure", "0");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("out of range"));
    let o = eval("r_pressure", "602");
    assert_eq!(o.status.code(), Some(2));
    let o = eval("r_nope", "1");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r_outlet_valve"));
}

#[test]
fn eval_matches_the_monitor_on_a_fault() {
    let dir = fixtures();
    let spec = path(dir.path(), "autoclave.spec");
    let trace = path(dir.path(), "sensor_bias.csv");
    let o = mtlmon(&[
        "eval",
        "--spec",
        &spec,
        "--trace",
        &trace,
        "--requirement",
        "r_pressure",
        "--index",
        "1",
    ]);
    assert_eq!(stdout(&o).trim(), "false");
    let o = mtlmon(&[
        "eval",
        "--spec",
        &spec,
        "--trace",
        &trace,
        "--requirement",
        "r_pressure",
        "--index",
        "400",
    ]);
    assert_eq!(stdout(&o).trim(), "false");
    let o = mtlmon(&[
        "eval",
        "--spec",
        &spec,
        "--trace",
        &trace,
        "--requirement",
        "r_temp_c1",
        "--index",
        "1",
    ]);
    assert_eq!(stdout(&o).trim(), "true");
}
