use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use serde_json::Value;

use formality::graph::{wheel, AdmissibleGraph, Vertex};
use formality_cli::{run, Cli, CliError, RunReport, EXIT_RESOURCE, EXIT_VALIDATION};

fn go(dir: &Path, args: &[&str]) -> Result<RunReport, CliError> {
    let cache = dir.join("cache");
    let mut full = vec!["formality", "--cache-root", cache.to_str().unwrap()];
    full.extend_from_slice(args);
    run(&Cli::try_parse_from(full).unwrap())
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    go(dir, args).unwrap_or_else(|e| panic!("{args:?}: {e:?}")).results
}

fn mc(v: &Value) -> (f64, f64) {
    assert_eq!(v["kind"], "mc");
    (v["value"].as_f64().unwrap(), v["stderr"].as_f64().unwrap())
}

#[test]
fn graph_listings() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(dir.path(), &["graphs", "--flavor", "halfplane", "-n", "1", "-m", "2"]);
    assert_eq!(r["count"], "2");
    assert_eq!(r["graphs"].as_array().unwrap().len(), 2);
    let r = ok(dir.path(), &["graphs", "--flavor", "disk", "-n", "0", "-m", "2"]);
    let graphs: Vec<AdmissibleGraph> =
        r["graphs"].as_array().unwrap().iter().map(|g| AdmissibleGraph::from_json(&g["graph"]).unwrap()).collect();
    assert!(graphs.iter().any(|g| g.marked == vec![Vertex::Boundary(1)]));
    let r = ok(dir.path(), &["graphs", "--flavor", "disk", "--wheels", "2"]);
    assert_eq!(AdmissibleGraph::from_json(&r["graphs"][0]["graph"]).unwrap(), wheel(2).unwrap());
    // odd wheels are flagged
    let r = ok(dir.path(), &["graphs", "--flavor", "disk", "--wheels", "3"]);
    assert_eq!(r["graphs"][0]["zero_weight"], true);
}

#[test]
fn weights_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = ok(dir.path(), &["weight", "--id", "mu", "--samples", "100000"]);
    let (v, e) = mc(&first["value"]);
    assert!((v - 1.0).abs() < 1e-2 && (v - 1.0).abs() <= 3.0 * e + 1e-12);
    assert_eq!(first["cache_hit"], false);
    let second = ok(dir.path(), &["weight", "--id", "mu", "--samples", "100000"]);
    assert_eq!(second["cache_hit"], true);
    assert_eq!(first["value"], second["value"]);
    let w2 = ok(dir.path(), &["weight", "--id", "wheel2", "--samples", "100000"]);
    let (v, e) = mc(&w2["value"]);
    assert!(v.abs() <= 3.0 * e, "{v} ± {e}");
    // from a graph file
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"flavor":"disk","n":0,"m":2,"stars":{"c":["b2"]}}"#).unwrap();
    let from_file = ok(dir.path(), &["weight", "--graph", path.to_str().unwrap(), "--samples", "100000"]);
    assert_eq!(from_file["value"], first["value"]);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--no-cache", "--seed", "7", "star", "--dim", "2", "--poisson", "affine2", "--order", "2", "--f", "x0^2", "--g", "x1"];
    let a = go(dir.path(), &args).unwrap();
    let b = go(dir.path(), &args).unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    let c = go(dir.path(), &["--no-cache", "--seed", "8", "star", "--dim", "2", "--poisson", "affine2", "--order", "2", "--f", "x0^2", "--g", "x1"]).unwrap();
    assert_ne!(a.deterministic_json(), c.deterministic_json());
}

#[test]
fn star_commutator_is_the_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(dir.path(), &["star", "--dim", "2", "--poisson", "const01", "--order", "1", "--f", "x0", "--g", "x1"]);
    assert_eq!(r["commutator"][0]["value"]["value"], "0");
    // {x0, x1} = 1
    let (v, e) = mc(&r["commutator"][1]["value"]["numeric"]["x^(0,0)"]);
    assert!((v - 1.0).abs() <= 3.0 * e, "{v} ± {e}");
    assert_eq!(r["product"][0]["value"]["value"], "x0*x1");
}

#[test]
fn suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["symbolic", "tangent"] {
        let r = go(dir.path(), &["verify", "--suite", suite, "--cases", "10"]).unwrap();
        assert_eq!(r.passed, Some(true), "{suite}: {}", r.results);
    }
    let r = go(dir.path(), &["duflo", "--algebra", "heisenberg3", "--degree", "4"]).unwrap();
    assert_eq!(r.passed, Some(true));
    assert_eq!(r.results["alpha"][1]["alpha"]["value"], "-1/5760");
    let r = ok(dir.path(), &["trace", "--algebra", "affine2", "--a", "x0^2*x1", "--order", "2", "--direct"]);
    assert_eq!(r["direct_agrees"], true);
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"samples": 1234, "seed": 99, "k_sigma": 4.0}"#).unwrap();
    let r = go(dir.path(), &["--config", cfg.to_str().unwrap(), "weight", "--id", "mu"]).unwrap();
    assert_eq!(r.seed, 99);
    assert_eq!(r.parameters["samples"], 1234);
    // flags override the file
    let r = go(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "5", "weight", "--id", "mu"]).unwrap();
    assert_eq!(r.seed, 5);
    std::fs::write(&cfg, r#"{"samples": 10, "colour": "red"}"#).unwrap();
    let e = go(dir.path(), &["--config", cfg.to_str().unwrap(), "weight", "--id", "mu"]).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
    let e = go(dir.path(), &["star", "--dim", "2", "--poisson", "const01", "--f", "x0 +", "--g", "x1"]).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_VALIDATION);
    let e = go(dir.path(), &["graphs", "--flavor", "halfplane", "-n", "6", "-m", "6"]).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_RESOURCE);
}

#[test]
fn binary_exit_codes_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_formality");
    let out = Process::new(bin)
        .args(["--cache-root", dir.path().to_str().unwrap(), "graphs", "--flavor", "halfplane", "-n", "1", "-m", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "graphs");
    assert!(v["versions"]["integrandVersion"].is_string());
    let out = Process::new(bin).args(["star", "--dim", "3", "--poisson", "x0*d0^d1 + x1*d1^d2", "--f", "x0", "--g", "x1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    let out = Process::new(bin).args(["--table", "duflo", "--algebra", "so3"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"1/48\" (exact)"));
    let out = Process::new(bin).args(["graphs"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
