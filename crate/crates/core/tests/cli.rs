mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use serde_json::Value;
use tempfile::TempDir;

fn locc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locc")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn family_file(dir: &TempDir, spec: &str) -> PathBuf {
    let path = dir.path().join(format!("{}.json", spec.replace(':', "_")));
    let out = locc(&["family", spec, "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_named_families() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("b9", "indistinguishable", Value::from("irreducible-opb")),
        ("b8", "indistinguishable", Value::from("class3")),
        ("upb_example", "indistinguishable", Value::from("upb")),
        ("b9_minus:phi1", "distinguishable", Value::Null),
    ];
    for (spec, verdict, class) in cases {
        let f = family_file(&dir, spec);
        let out = locc(&["classify", s(&f)]);
        assert_eq!(out.status.code(), Some(0), "{spec}");
        let report = json(&out);
        assert_eq!(report["verdict"], verdict, "{spec}");
        assert_eq!(report["class"], class, "{spec}");
        assert_eq!(report["valid"], true);
    }
}

#[test]
fn propdist_protocol_simulates_reliably() {
    let dir = TempDir::new().unwrap();
    let full = family_file(&dir, "b9");
    let rest = family_file(&dir, "b9_minus:phi3");
    let proto = dir.path().join("p.json");
    let out = locc(&["protocol", "--propdist", "phi3", s(&full), "--out", s(&proto)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = locc(&["simulate", s(&proto), s(&rest)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["reliable"], true);
    for (label, p) in report["per_state"].as_object().unwrap() {
        assert!(p.as_f64().unwrap() >= 1.0 - 1e-9, "{label}");
    }

    // the same tree on the full basis cannot identify phi3
    let report = json(&locc(&["simulate", s(&proto), s(&full)]));
    assert_eq!(report["reliable"], false);
}

#[test]
fn two_copy_and_representation_commands() {
    let dir = TempDir::new().unwrap();
    let b9 = family_file(&dir, "b9");
    let rep = dir.path().join("rep.json");
    assert_eq!(locc(&["rectrep", "--construct", s(&b9), "--out", s(&rep)]).status.code(), Some(0));
    let proto = dir.path().join("two.json");
    let out = locc(&["protocol", "--two-copy", "--rep", s(&rep), s(&b9), "--out", s(&proto)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&locc(&["simulate", s(&proto), s(&b9)]))["reliable"], true);

    let theta = dir.path().join("theta.json");
    locc(&["family", "theta_2x4", "--theta", "0.5", "--out", s(&theta)]);
    let out = locc(&["rectrep", "--search", s(&theta)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), Value::Null);
}

#[test]
fn complement_of_b8() {
    let dir = TempDir::new().unwrap();
    let b8 = family_file(&dir, "b8");
    let out = locc(&["complement", s(&b8)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let text = report.to_string();
    assert!(text.contains("perp"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let broken = write(
        &dir,
        "broken.json",
        r#"{"dims":{"a":2,"b":2},"states":[
            {"label":"x","a":[[1,0],[0,0]],"b":[[1,0],[0,0]]},
            {"label":"y","a":[[1,0],[1,0]],"b":[[1,0],[0,0]]}]}"#,
    );
    let out = locc(&["validate", s(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["valid"], false);

    let garbage = write(&dir, "garbage.json", "{ not json");
    assert_eq!(locc(&["classify", s(&garbage)]).status.code(), Some(1));
    assert_eq!(locc(&["classify", "/nonexistent/file.json"]).status.code(), Some(1));
    assert_eq!(locc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(locc(&["--help"]).status.code(), Some(0));

    let big = write(&dir, "grid.json", &computational(4, 4).to_json());
    assert_eq!(locc(&["rectrep", "--search", s(&big)]).status.code(), Some(3));

    let b9 = family_file(&dir, "b9");
    assert_eq!(locc(&["protocol", "--propdist", "phi9", s(&b9)]).status.code(), Some(1));
    assert_eq!(locc(&["protocol", "--propdist", "nobody", s(&b9)]).status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = locc(&["family", "class3_random", "--seed", "4"]);
    let b = locc(&["family", "class3_random", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let f = write(&dir, "c3.json", &String::from_utf8(a.stdout).unwrap());
    let x = locc(&["analyze", s(&f)]);
    let y = locc(&["analyze", s(&f)]);
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(json(&locc(&["classify", s(&f)]))["class"], "class3");
}

#[test]
fn text_output() {
    let dir = TempDir::new().unwrap();
    let b9 = family_file(&dir, "b9");
    let out = locc(&["classify", "--output", "text", s(&b9)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("indistinguishable"), "{text}");
}
