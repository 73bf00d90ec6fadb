use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_endochain"))
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().env_remove("ENDOCHAIN_PD_CAP").args(args).output().unwrap()
}

fn json_out(args: &[&str]) -> Value {
    let mut full = vec!["--output", "json"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn chain_of_2_5() {
    let v = json_out(&["chain", corpus("semigroup_2_5.json").to_str().unwrap()]);
    assert_eq!(v["n"], 2);
    assert_eq!(v["e"], 2);
    assert_eq!(v["delta"], 2);
    assert_eq!(v["normalization_check"], true);
}

#[test]
fn gldim_of_cusp() {
    let v = json_out(&["gldim", corpus("semigroup_2_3.json").to_str().unwrap()]);
    assert_eq!(v["gldim"], 2);
    assert_eq!(v["chain_bound"], 2);
    assert_eq!(v["within_chain_bound"], true);
}

#[test]
fn ring_of_dvr() {
    let v = json_out(&["ring", corpus("dvr.json").to_str().unwrap()]);
    assert_eq!(v["multiplicity"], 1);
    assert_eq!(v["is_dvr_product"], true);
}

#[test]
fn ring_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&["ring", corpus("tacnode.json").to_str().unwrap()]);
    let again = write(dir.path(), "again.json", &v["definition"].to_string());
    let w = json_out(&["ring", again.to_str().unwrap()]);
    assert_eq!(v, w);
}

#[test]
fn resolve_with_relative_ring() {
    let v = json_out(&["resolve", corpus("modules/ideal_1_t_over_3_4.json").to_str().unwrap()]);
    assert_eq!(v["length"], 1);
    assert_eq!(v["certificate"]["exact"], true);
}

#[test]
fn resolve_with_inline_and_flag_ring() {
    let dir = tempfile::tempdir().unwrap();
    let inline = write(
        dir.path(),
        "m.json",
        r#"{"ring":{"semigroup":[2,3]},"ambient_rank":[1],"generators":[[[[2,"1"]]],[[[3,"1"]]]],"tail":[2]}"#,
    );
    assert_eq!(json_out(&["resolve", inline.to_str().unwrap()])["length"], 0);
    let bare = write(
        dir.path(),
        "bare.json",
        r#"{"ambient_rank":[1],"generators":[[[[0,"1"]]]],"tail":[2]}"#,
    );
    let ring = corpus("semigroup_2_3.json");
    let v = json_out(&["resolve", bare.to_str().unwrap(), "--ring", ring.to_str().unwrap()]);
    assert_eq!(v["length"], 0);
    let out = run(&["resolve", bare.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gldim_with_module_list() {
    let dir = tempfile::tempdir().unwrap();
    let mods = write(
        dir.path(),
        "mods.json",
        r#"[{"ambient_rank":[1],"generators":[[[[0,"1"]]]],"tail":[2]},
            {"ambient_rank":[1],"generators":[[[[0,"1"]]],[[[1,"1"]]]],"tail":[2]}]"#,
    );
    let ring = corpus("semigroup_2_3.json");
    let v = json_out(&["gldim", ring.to_str().unwrap(), "--modules", mods.to_str().unwrap()]);
    assert_eq!(v["gldim"], 2);
    let missing = write(
        dir.path(),
        "nofree.json",
        r#"[{"ambient_rank":[1],"generators":[[[[2,"1"]]],[[[3,"1"]]]],"tail":[2]}]"#,
    );
    let out = run(&["gldim", ring.to_str().unwrap(), "--modules", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "MissingFreeSummand");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ring", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let garbage = write(dir.path(), "g.json", "{\"semigroup\": ");
    assert_eq!(run(&["ring", garbage.to_str().unwrap()]).status.code(), Some(2));
    let bad = write(dir.path(), "b.json", r#"{"branches":1,"generators":[[[[2,"x"]]]]}"#);
    let out = run(&["ring", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "Parse");
    assert!(err["context"]["path"].is_string());
    let out = run(&["--pd-cap", "0", "ring", corpus("dvr.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["verify", "--suite", "nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pd_cap_from_environment() {
    let out = bin()
        .env("ENDOCHAIN_PD_CAP", "0")
        .args(["ring", corpus("dvr.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn double_check_agrees() {
    let out = run(&[
        "--double-check",
        "gldim",
        corpus("semigroup_3_4.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("gldim 3"));
}

#[test]
fn verify_shipped_corpus() {
    let dir = corpus("");
    let v = json_out(&["verify", dir.to_str().unwrap(), "--suite", "all"]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"].as_array().unwrap().len(), 7);
}
