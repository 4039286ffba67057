mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use torscalc::cli;

fn torscalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torscalc")).args(args).output().expect("failed to spawn binary")
}

fn assert_golden(name: &str) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let script = root.join("scripts").join(format!("{name}.tors"));
    let out = torscalc(&["run", script.to_str().unwrap()]);
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    let want = std::fs::read(root.join("tests/golden").join(format!("{name}.out"))).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&want), "{name}");
}

#[test]
fn golden_sphere_values() {
    assert_golden("sphere_values");
}

#[test]
fn golden_hatcher() {
    assert_golden("hatcher");
}

#[test]
fn golden_morse() {
    assert_golden("morse");
}

#[test]
fn golden_relative_products() {
    assert_golden("relative_products");
}

#[test]
fn golden_decomposition() {
    assert_golden("decomposition");
}

#[test]
fn eval_prints_one_line_per_query() {
    let out = torscalc(&["eval", "-e", "root x; vb l = line(x); E = sphere(l, n=1); theory F = fr(1); query tau(F, E)"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, b"1/2*z3*x^2\n");
}

#[test]
fn exit_codes() {
    assert_eq!(torscalc(&["eval", "-e", "query tau(F, E)"]).status.code(), Some(1));
    assert_eq!(torscalc(&["eval", "-e", "E = sphere("]).status.code(), Some(1));
    let bad = "root x; query tau(fr(1), union(disk(line(x) + trivial(1)), disk(trivial(3))))";
    let out = torscalc(&["eval", "-e", bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1:9"));
    assert_eq!(torscalc(&["run", "/nonexistent.tors"]).status.code(), Some(1));
}

#[test]
fn output_before_an_evaluation_error_is_kept() {
    let out = torscalc(&["eval", "-e", "query chi(disk(trivial(2)))\nquery tdelta(custom(1, 1, 0), disk(trivial(2)))"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(out.stdout, b"1\n");
}

#[test]
fn verify_records() {
    let out = torscalc(&["verify", "--seed", "3", "--depth", "3", "--samples", "10", "--k", "2", "--records"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["status"], "pass", "{line}");
        assert!(v["citation"].is_string() && v["samples"].is_u64());
    }
    assert!(text.lines().count() > 20);
}

#[test]
fn generated_scripts_round_trip_and_run() {
    for seed in 0..100 {
        let src = common::random_script(seed);
        let ast = cli::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let printed = ast.to_string();
        assert_eq!(cli::parse(&printed).unwrap(), ast, "{src}");
        let a = cli::run(&ast).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let b = cli::run(&cli::parse(&printed).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 4);
    }
}
