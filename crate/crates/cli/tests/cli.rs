use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lacunae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacunae"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn compare_generators() {
    let out = lacunae(&["order", "compare", "a", "b"]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["report"]["relation"], "greater");
    assert_eq!(v["report"]["deciding_monomial"], "A");
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn undecided_exits_three() {
    let out = lacunae(&["order", "compare", "a b a^-1 b^-1", "1", "--max-degree", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["report"]["relation"], "undecided");
}

#[test]
fn dyadic_powers_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "w.json", r#"["a", "a^2", "a^4", "a^8", "a^16"]"#);
    let out = lacunae(&["certify", "psi", "--words", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["report"]["delta"], "1/2");
    assert_eq!(v["config"]["length"], "word");
}

#[test]
fn failing_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "w.json", r#"["a", "b", "a^4"]"#);
    let out = lacunae(&["certify", "psi", "--words", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["verdict"], "fail");
}

#[test]
fn empty_and_malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e.json", "");
    let out = lacunae(&["certify", "psi", "--words", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "schema");
    assert!(!out.stderr.is_empty());

    let bad = write(dir.path(), "b.json", "[\"a\", ");
    let out = lacunae(&["certify", "psi", "--words", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "parse");

    let out = lacunae(&["words", "reduce", "a c"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(
        dir.path(),
        "x.json",
        r#"{"rank":2,"dim":1,"terms":[{"word":"a","coeff":[[1,0]]},{"word":"b^-1","coeff":[[0,1]]}]}"#,
    );
    let args = ["norm", "bmo", "--input", &x, "--radius", "3", "--tgrid", "log:0.01:10:7"];
    let first = lacunae(&args);
    let second = lacunae(&[&args[..], &["--jobs", "2"]].concat());
    assert_eq!(first.status.code(), Some(0));
    let strip = |o: &Output| {
        let mut v = report(o);
        v["config"]["jobs"] = Value::Null;
        v
    };
    assert_eq!(strip(&first), strip(&second));
    assert_eq!(first.stdout, lacunae(&args).stdout);
}

#[test]
fn report_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let o = out_path.display().to_string();
    let status = lacunae(&["magnus", "embed", "a^-2 b", "--degree", "3", "--out", &o]);
    assert_eq!(status.status.code(), Some(0));
    assert!(status.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let series = lacunae::magnus::NCPolynomial::from_json(2, 3, &v["report"]["series"]).unwrap();
    let w = lacunae::Word::parse(2, "a^-2 b").unwrap();
    assert_eq!(series, lacunae::magnus::magnus_embed(&w, 3));
}

#[test]
fn csv_output() {
    let out = lacunae(&["words", "multiply", "a b", "b^-1 a", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("report.product,a^2\n"));
    assert!(text.contains("verdict,pass\n"));
}

#[test]
fn theorem1_on_dyadic_powers() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"rank":1,"words":["a","a^2","a^4","a^8"]}"#);
    let cfg = write(dir.path(), "c.json", r#"{"radius":10,"t_grid":"log:0.001:10:24"}"#);
    let out = lacunae(&["paley", "theorem1", "--input", &f, "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v = report(&out);
    assert_eq!(v["config"]["radius"][0], 10);
    assert_eq!(v["report"]["passed"], true);
}

#[test]
fn theorem1_rejects_non_lacunary() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "s.json", r#"{"rank":1,"words":["a","a^-1","a^4"]}"#);
    let out = lacunae(&["paley", "theorem1", "--input", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["error"]["kind"], "not_lacunary");
}

#[test]
fn gram_and_schoenberg() {
    let out = lacunae(&["cnd", "--length", "word", "--radius", "2", "--schoenberg", "0.1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let out = lacunae(&["cnd", "--length", "scaled:-1:word", "--radius", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["report"]["gram"]["verdict"], "fail");
}
