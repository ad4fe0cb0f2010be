use std::path::Path;
use std::process::Command;

use serde_json::Value;
use twotime::scenario::three_boxes_preset;
use twotime_cli::{parse_scenario, run_command, ScenarioDocument};

const HAND_DOC: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/three_boxes.json");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    artifacts: Vec<std::path::PathBuf>,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("twotime").chain(args.iter().copied());
    let r = run_command(argv, &mut out, &mut err);
    Run {
        code: r.exit_code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
        artifacts: r.artifacts,
    }
}

fn json(r: &Run) -> Value {
    assert_eq!(r.code, 0, "{}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn preset_round_trips() {
    let r = run(&["preset", "three-boxes", "--epsilon", "1"]);
    assert_eq!(r.code, 0);
    let parsed = parse_scenario(&r.stdout).unwrap();
    let a = serde_json::to_value(ScenarioDocument::from_scenario(&parsed)).unwrap();
    let b = serde_json::to_value(ScenarioDocument::from_scenario(
        &three_boxes_preset(1.0).unwrap(),
    ))
    .unwrap();
    fn walk(a: &Value, b: &Value) {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => {
                assert!(close(x.as_f64().unwrap(), y.as_f64().unwrap(), 1e-15))
            }
            (Value::Array(x), Value::Array(y)) => {
                assert_eq!(x.len(), y.len());
                x.iter().zip(y).for_each(|(p, q)| walk(p, q));
            }
            (Value::Object(x), Value::Object(y)) => {
                assert_eq!(x.len(), y.len());
                x.iter().for_each(|(k, v)| walk(v, &y[k]));
            }
            _ => assert_eq!(a, b),
        }
    }
    walk(&a, &b);
}

#[test]
fn non_hermitian_hamiltonian_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(HAND_DOC).unwrap()).unwrap();
    doc["segments"][0]["H"][0][1] = serde_json::json!([1.0, 0.5]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let r = run(&["abl", "--scenario", path.to_str().unwrap(), "--time", "0"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("ValidationError"), "{}", r.stderr);
    assert!(r.stderr.contains("segments[0]"), "{}", r.stderr);
}

#[test]
fn malformed_document_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(HAND_DOC).unwrap()).unwrap();
    doc["pre"][1] = serde_json::json!("i");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let r = run(&["abl", "--scenario", path.to_str().unwrap(), "--time", "0"]);
    assert_eq!(r.code, 2);
    assert!(
        r.stderr.contains("ParseError") && r.stderr.contains("pre[1]"),
        "{}",
        r.stderr
    );
}

#[test]
fn weak_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let r = run(&[
        "weak-sweep",
        "--preset",
        "three-boxes",
        "--observables",
        "P1,P2,P3,SY",
        "--steps",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.artifacts, vec![out.clone()]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,observable,re,im");
    assert_eq!(lines.len(), 1 + 200 * 4);
    let expected = [("P1", 1.0), ("P2", -1.0), ("P3", 1.0)];
    for (line, (label, value)) in lines[1..4].iter().zip(expected) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[1], label);
        assert!(close(f[2].parse().unwrap(), value, 1e-12));
        assert!(close(f[3].parse().unwrap(), 0.0, 1e-12));
    }
}

#[test]
fn abl_table_at_t2() {
    let v = json(&run(&[
        "abl",
        "--preset",
        "three-boxes",
        "--time",
        "t2",
        "--projectors",
        "boxes",
    ]));
    let p: Vec<f64> = v["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["p"].as_f64().unwrap())
        .collect();
    assert!(close(p[0], 0.0, 1e-12) && close(p[1], 0.0, 1e-12) && close(p[2], 1.0, 1e-12));
}

#[test]
fn monte_carlo_rate() {
    let v = json(&run(&[
        "mc",
        "--preset",
        "three-boxes",
        "--trials",
        "100000",
        "--seed",
        "42",
    ]));
    let rate = v["postselected"].as_f64().unwrap() / v["total_trials"].as_f64().unwrap();
    let se = (1.0 / 9.0 * 8.0 / 9.0 / 1e5f64).sqrt();
    assert!((rate - 1.0 / 9.0).abs() <= 4.0 * se);
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 0);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "mc",
        "--preset",
        "three-boxes",
        "--time",
        "t2",
        "--trials",
        "30000",
        "--seed",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let c = run(&one);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let sweep = [
        "weak-sweep",
        "--preset",
        "three-boxes",
        "--observables",
        "SX,SY",
        "--steps",
        "50",
    ];
    assert_eq!(run(&sweep).stdout, run(&sweep).stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&[
            "abl",
            "--preset",
            "three-boxes",
            "--time",
            "t2",
            "--frobnicate"
        ])
        .code,
        2
    );
    assert_eq!(run(&["abl", "--time", "t2"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);

    let r = run(&["abl", "--preset", "three-boxes", "--time", "7"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("TimeRangeError"));

    let r = run(&[
        "theorem-check",
        "--preset",
        "three-boxes",
        "--observable",
        "SY",
        "--time",
        "t2",
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("SpectrumError"));
}

#[test]
fn failures_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let r = run(&[
        "pointer",
        "--preset",
        "three-boxes",
        "--observable",
        "SY",
        "--time",
        "t2",
        "--g",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.artifacts.is_empty());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn solenoid_flag() {
    let v = json(&run(&[
        "pointer",
        "--preset",
        "three-boxes",
        "--observable",
        "SY",
        "--time",
        "t2",
        "--event",
        "solenoid@t2",
    ]));
    assert!(close(v["estimate_re"].as_f64().unwrap(), 2.0, 5e-2));

    let r = run(&[
        "weak-sweep",
        "--preset",
        "three-boxes",
        "--event",
        "solenoid@0",
        "--observables",
        "P2",
        "--steps",
        "2",
    ]);
    let first = r.stdout.lines().nth(1).unwrap();
    assert!(close(
        first.split(',').nth(2).unwrap().parse().unwrap(),
        1.0,
        1e-10
    ));
}

#[test]
fn hand_written_document_reproduces_the_preset() {
    let doc = Path::new(HAND_DOC).to_str().unwrap();
    let s = parse_scenario(&std::fs::read_to_string(doc).unwrap()).unwrap();
    let preset = three_boxes_preset(1.0).unwrap();
    for t in [
        0.0,
        0.3,
        std::f64::consts::FRAC_PI_4,
        2.0,
        std::f64::consts::PI,
    ] {
        let a = s.forward_propagator(t).unwrap();
        let b = preset.forward_propagator(t).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-14);
    }
    let sweep = |src: &[&str]| {
        let mut args = vec![
            "weak-sweep",
            "--observables",
            "P1,P2,P3,SX,SY,SZ",
            "--steps",
            "33",
        ];
        args.extend_from_slice(src);
        run(&args).stdout
    };
    let from_doc = sweep(&["--scenario", doc]);
    let from_preset = sweep(&["--preset", "three-boxes"]);
    for (x, y) in from_doc.lines().zip(from_preset.lines()).skip(1) {
        let fx: Vec<&str> = x.split(',').collect();
        let fy: Vec<&str> = y.split(',').collect();
        assert_eq!(fx[1], fy[1]);
        for k in [0, 2, 3] {
            assert!(
                close(fx[k].parse().unwrap(), fy[k].parse().unwrap(), 1e-12),
                "{x} vs {y}"
            );
        }
    }

    for (t, projectors, certain) in [("t1", "P1", 0), ("t2", "boxes", 2), ("t3", "P2", 0)] {
        let v = json(&run(&[
            "abl",
            "--scenario",
            doc,
            "--time",
            t,
            "--projectors",
            projectors,
        ]));
        assert!(close(
            v["outcomes"][certain]["p"].as_f64().unwrap(),
            1.0,
            1e-12
        ));
    }
    let v = json(&run(&[
        "mc",
        "--scenario",
        doc,
        "--trials",
        "100000",
        "--seed",
        "42",
    ]));
    let rate = v["postselected"].as_f64().unwrap() / 1e5;
    assert!((rate - 1.0 / 9.0).abs() <= 4.0 * (1.0 / 9.0 * 8.0 / 9.0 / 1e5f64).sqrt());
    let v = json(&run(&[
        "pointer",
        "--scenario",
        doc,
        "--observable",
        "SY",
        "--time",
        "t2",
    ]));
    assert!(close(v["estimate_re"].as_f64().unwrap(), -2.0, 5e-2));
    let v = json(&run(&[
        "deterministic-set",
        "--scenario",
        doc,
        "--time",
        "t1",
        "--observables",
        "P1",
    ]));
    assert_eq!(v["observables"][0]["class"], "deterministic");
}

#[test]
fn binary_reports_errors_on_stderr() {
    let bin = env!("CARGO_BIN_EXE_twotime");
    let ok = Command::new(bin)
        .args([
            "abl",
            "--preset",
            "three-boxes",
            "--time",
            "t1",
            "--projectors",
            "P1",
        ])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stderr.is_empty());
    let bad = Command::new(bin)
        .args(["abl", "--preset", "three-boxes", "--time", "99"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("TimeRangeError"));
    let usage = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
