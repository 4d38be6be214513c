use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use triplane::analysis::DistributionFile;
use triplane::distribution::PolynomialAnnihilators;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn triplane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triplane")).args(args).output().unwrap()
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = triplane(args);
    let json = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stderr));
    });
    (out.status.code().unwrap(), json)
}

#[test]
fn flat_fixture_matches_builtin() {
    let f = DistributionFile::read(&fixture("flat.json")).unwrap();
    assert_eq!(f.annihilators, PolynomialAnnihilators::flat());
}

#[test]
fn perturbed_fixture_matches_generator() {
    let f = DistributionFile::read(&fixture("perturbed.json")).unwrap();
    assert_eq!(f.annihilators, PolynomialAnnihilators::perturbed(0.1, 1));
}

#[test]
fn flat_builtin_is_flat() {
    let (code, json) = report(&["analyze", "--builtin", "flat"]);
    assert_eq!(code, 0);
    let p = &json["points"][0];
    assert_eq!(p["s_flat"], true);
    assert_eq!(p["weyl_flat"], true);
    assert_eq!(p["agreement"], true);
    assert_eq!(p["gauge_dimension"], 3);
}

#[test]
fn perturbed_fixture_is_not_flat() {
    let path = fixture("perturbed.json");
    let (code, json) = report(&["analyze", "--input", path.to_str().unwrap(), "--point", "0.1,-0.2,0.3,0,0.2,-0.1"]);
    assert_eq!(code, 0);
    let p = &json["points"][0];
    assert_eq!(p["s_flat"], false);
    assert_eq!(p["weyl_flat"], false);
    assert_eq!(p["agreement"], true);
    assert!(p["spinor_kernel_dimension"].as_u64().unwrap() >= 1);
    assert_eq!(p["s4"].as_array().unwrap().len(), 81);
}

#[test]
fn reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = triplane(&[
            "analyze", "--builtin", "perturbed", "--c", "0.05", "--seed", "3", "--point", "0,0,0,0,0,0", "--point",
            "0.5,0.1,-0.3,0.2,0,0.4", "--report", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn low_order_is_reported_per_point() {
    let (code, json) = report(&["analyze", "--builtin", "flat", "--order", "3", "--stages", "conformal"]);
    assert_eq!(code, 1);
    let err = json["points"][0]["error"].as_str().unwrap();
    assert!(err.contains("insufficient order"), "{err}");
}

#[test]
fn adaptation_only_omits_later_blocks() {
    let (code, json) = report(&["analyze", "--builtin", "flat", "--stages", "adaptation"]);
    assert_eq!(code, 0);
    let p = &json["points"][0];
    assert!(p.get("p_matrix").is_some());
    assert!(p.get("s4").is_none());
    assert!(p.get("weyl_norm").is_none());
}

#[test]
fn malformed_monomial_is_a_schema_error() {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture("flat.json")).unwrap()).unwrap();
    v["annihilators"][0][0]["monomial"] = serde_json::json!([0, 0, 0, 0, 0]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let out = triplane(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("$.annihilators[0][0].monomial"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(triplane(&["analyze"]).status.code(), Some(2));
    assert_eq!(triplane(&["analyze", "--builtin", "flat", "--point", "1,2"]).status.code(), Some(2));
    assert_eq!(triplane(&["analyze", "--builtin", "flat", "--stages", "bogus"]).status.code(), Some(2));
}
