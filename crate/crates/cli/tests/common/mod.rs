#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

pub fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

pub fn schema(name: &str) -> serde_json::Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speclint"))
        .args(args)
        .env("SPECLINT_COLOR", "0")
        .output()
        .unwrap_or_else(|e| panic!("failed to run speclint {args:?}: {e}"))
}

pub fn code(output: &Output) -> i32 {
    output.status.code().expect("speclint exits normally")
}

pub fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

pub fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

pub fn json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout)
        .unwrap_or_else(|e| panic!("invalid JSON ({e}): {}\n{}", stdout(output), stderr(output)))
}

pub const OVERSHOOT_TEMPLATE: &str = "template:overshoot(x,ref=1,m=0.2,H=40)";

/// Falsification arguments of the overshoot scenario on the five-point grid.
pub fn overshoot_falsify_args() -> Vec<String> {
    [
        "falsify",
        &fixture("overshoot.mitl"),
        "--model",
        "secondorder",
        "--grid",
        &fixture("grid5.json"),
    ]
    .into_iter()
    .chain(["--budget", "200", "--seed", "42", "--format", "json"])
    .map(str::to_string)
    .collect()
}

/// Overshoot-margin mining arguments on the step-input grid.
pub fn mining_args(iters: &str) -> Vec<String> {
    [
        "mine",
        OVERSHOOT_TEMPLATE,
        "--param",
        "m",
        "--lo",
        "0",
        "--hi",
        "1",
        "--iters",
        iters,
    ]
    .into_iter()
    .chain([
        "--model",
        "secondorder",
        "--grid",
        &fixture("step_grid.json"),
    ])
    .chain(["--budget", "200", "--seed", "42", "--format", "json"])
    .map(str::to_string)
    .collect()
}

pub fn run_owned(args: &[String]) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}
