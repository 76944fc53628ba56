//! The `bernsum` binary: outputs, formats and exit codes.

use std::io::Write;
use std::process::{Command, Output};

fn bernsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bernsum"))
        .args(args)
        .env_remove("BERNSUM_BUDGET")
        .output()
        .expect("run bernsum")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = bernsum(&full);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout(&out)).expect("valid json")
}

fn strings(v: &serde_json::Value) -> Vec<String> {
    match v {
        serde_json::Value::Array(items) => items
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect(),
        serde_json::Value::Object(map) => map
            .values()
            .map(|s| s.as_str().unwrap().to_string())
            .collect(),
        other => panic!("not a list: {other}"),
    }
}

#[test]
fn moments_command() {
    let v = json(&[
        "moments", "--dist", "matching", "--n", "5", "--kmax", "4", "--kind", "raw",
    ]);
    assert_eq!(strings(&v["values"]), ["1", "1", "2", "5", "15"]);
    assert_eq!(v["provenance"], "engine");

    let v = json(&[
        "moments",
        "--dist",
        "binomial",
        "--n",
        "3",
        "--p",
        "1/2",
        "--kind",
        "factorial",
        "--kmax",
        "4",
    ]);
    assert_eq!(strings(&v["values"]), ["1", "3/2", "3/2", "3/4", "0"]);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "kind",
            "kmax",
            "values",
            "provenance",
            "approx",
            "truncation_bound"
        ]
    );

    let v = json(&[
        "moments", "--dist", "benford", "--base", "10", "--kmax", "1",
    ]);
    let mean: f64 = strings(&v["values"])[1].parse().unwrap();
    assert!((mean - 3.440_236_967).abs() < 1e-9);
    assert_eq!(v["approx"], true);

    let closed = json(&[
        "moments",
        "--dist",
        "soliton",
        "--r",
        "5",
        "--kmax",
        "2",
        "--method",
        "closed-form",
    ]);
    let tail = json(&[
        "moments", "--dist", "soliton", "--r", "5", "--kmax", "2", "--method", "tail",
    ]);
    assert_eq!(closed["values"], tail["values"]);
    assert_eq!(strings(&tail["values"])[1], "137/60");
}

#[test]
fn pmf_command() {
    let v = json(&["pmf", "--dist", "matching", "--n", "3", "--via", "pgf"]);
    let probs: Vec<&str> = v["pmf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["prob"].as_str().unwrap())
        .collect();
    assert_eq!(probs, ["1/3", "1/2", "0", "1/6"]);

    let out = bernsum(&[
        "pmf", "--dist", "binomial", "--n", "2", "--p", "1/2", "--via", "frechet", "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(
        rows[0].starts_with("0,1/4")
            && rows[1].starts_with("1,1/2")
            && rows[2].starts_with("2,1/4")
    );

    let v = json(&["pmf", "--dist", "soliton", "--r", "2", "--via", "direct"]);
    let probs: Vec<&str> = v["pmf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["prob"].as_str().unwrap())
        .collect();
    assert_eq!(probs, ["1/2", "1/2"]);
}

#[test]
fn gf_command() {
    let v = json(&[
        "gf", "--dist", "matching", "--n", "4", "--gf", "fmgf", "--order", "4",
    ]);
    assert_eq!(strings(&v["coeffs"]), ["1", "1", "1/2", "1/6", "1/24"]);
    let v = json(&[
        "gf", "--dist", "binomial", "--n", "2", "--p", "1/2", "--gf", "mgf", "--order", "2",
    ]);
    assert_eq!(strings(&v["coeffs"]), ["1", "1", "3/4"]);
    let v = json(&[
        "gf", "--dist", "binomial", "--n", "2", "--p", "1/2", "--gf", "mgf", "--order", "0",
    ]);
    assert_eq!(strings(&v["coeffs"]), ["1"]);
}

#[test]
fn verify_command() {
    let out = bernsum(&[
        "verify",
        "--dist",
        "empty-urns",
        "--n",
        "4",
        "--balls",
        "3",
        "--kmax",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("hypergeometric(6,3,4)"));
    assert!(text.ends_with("verify: ok\n"));

    let out = bernsum(&[
        "verify",
        "--dist",
        "cmp-binomial",
        "--n",
        "6",
        "--p",
        "0.4",
        "--nu",
        "2",
        "--kmax",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let out = bernsum(&[
        "verify",
        "--dist",
        "soliton",
        "--r",
        "5",
        "--kmax",
        "4",
        "--as-printed",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("mismatch: factorial k=2: as_printed 14 vs closed_form 4"));

    let out = bernsum(&[
        "verify",
        "--dist",
        "matching",
        "--n",
        "6",
        "--kmax",
        "2",
        "--samples",
        "20000",
        "--seed",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ok"], true);
    assert!(v["columns"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c == "monte_carlo"));
}

#[test]
fn pmf_file_input() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"[{{"x":0,"prob":"1/4"}},{{"x":1,"prob":"1/2"}},{{"x":2,"prob":"1/4"}}]"#
    )
    .unwrap();
    let path = file.path().to_str().unwrap();
    let v = json(&["moments", "--pmf-file", path, "--kmax", "2"]);
    assert_eq!(strings(&v["values"]), ["1", "1", "3/2"]);
    assert_eq!(v["provenance"], "tail");

    let listed = json(&["pmf", "--pmf-file", path]);
    let mut again = tempfile::NamedTempFile::new().unwrap();
    write!(again, "{}", listed["pmf"]).unwrap();
    let v = json(&[
        "moments",
        "--pmf-file",
        again.path().to_str().unwrap(),
        "--kmax",
        "2",
    ]);
    assert_eq!(strings(&v["values"]), ["1", "1", "3/2"]);
}

#[test]
fn spec_json_input() {
    let v = json(&[
        "moments",
        "--spec",
        r#"{"dist":"hypergeometric","N":5,"g":3,"n":2}"#,
        "--kind",
        "choose",
        "--kmax",
        "2",
    ]);
    assert_eq!(strings(&v["values"])[2], "3/10");
    let out = bernsum(&[
        "moments",
        "--spec",
        r#"{"dist":"binomial","n":2,"p":"1/2","bogus":1}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let usage = [
        &["moments", "--dist", "zipf", "--n", "3"][..],
        &["moments", "--dist", "binomial", "--n", "3"],
        &["moments", "--dist", "binomial", "--n", "3", "--p", "3/2"],
        &[
            "moments", "--dist", "poisson", "--lambda", "1", "--method", "engine",
        ],
        &[
            "verify",
            "--dist",
            "binomial",
            "--n",
            "3",
            "--p",
            "1/2",
            "--as-printed",
        ],
        &["frobnicate"],
    ];
    for args in usage {
        let out = bernsum(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }

    let budget = bernsum(&[
        "moments",
        "--dist",
        "poisson-binomial",
        "--probs",
        "1/2,1/3,1/4,1/5",
        "--kmax",
        "4",
        "--budget",
        "5",
    ]);
    assert_eq!(budget.status.code(), Some(3));
    let from_env = Command::new(env!("CARGO_BIN_EXE_bernsum"))
        .args([
            "moments",
            "--dist",
            "poisson-binomial",
            "--probs",
            "1/2,1/3,1/4,1/5",
            "--kmax",
            "4",
        ])
        .env("BERNSUM_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(from_env.status.code(), Some(3));

    let truncated = bernsum(&["pmf", "--dist", "poisson", "--lambda", "1", "--via", "pgf"]);
    assert_eq!(truncated.status.code(), Some(3));
}
