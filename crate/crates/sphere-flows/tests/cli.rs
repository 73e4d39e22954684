//! End-to-end runs of the `sphere-flows` binary.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphere-flows"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/fields")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("sphere-flows-cli-{}-{name}", std::process::id()))
}

#[test]
fn count_and_enumerate() {
    let out = run(&["count", "planar-trees", "16"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["count"], 323396);

    let out = run(&["enumerate", "nc-trees", "5-vertices"]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> = out.stdout.split(|&b| b == b'\n').filter(|l| !l.is_empty()).map(|l| serde_json::from_slice(l).unwrap()).collect();
    assert_eq!(lines.len(), 7);
    assert!(lines.iter().all(|l| l["schema"] == "sphere-flows/1"));

    let out = run(&["enumerate", "planar-trees", "6"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);
}

#[test]
fn analyze_quadratic_has_empty_portrait_tree() {
    let out = run(&["analyze", &data("quadratic.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["mode"], "polynomial");
    let kinds: Vec<&str> = v["equilibria"].as_array().unwrap().iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["source", "sink"]);
    assert_eq!(v["nondegeneracy"]["overall"], true);
}

#[test]
fn analyze_cubic_gives_loop_and_edge() {
    let out = run(&["analyze", &data("cubic.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let p = &v["portraits"];
    assert_eq!(p["duality"]["verdict"], "pass");
    assert_eq!(p["c_plus"]["vertices"].as_array().unwrap().len(), 1);
    assert_eq!(p["c_plus"]["edges"].as_array().unwrap().len(), 1);
    assert_eq!(p["c_minus"]["vertices"].as_array().unwrap().len(), 2);
    // samples are summarized unless requested
    assert!(v["separatrices"][0].get("samples").is_none());
    let full = json(&run(&["analyze", &data("cubic.json"), "--trajectories"]));
    assert!(full["separatrices"][0]["samples"].as_array().unwrap().len() > 10);
}

#[test]
fn quartic_centers_fail_nondegeneracy_with_witnesses() {
    let out = run(&["check-nondeg", &data("quartic_centers.json")]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    let subsets: Vec<Value> = v["cond_iii"]["witnesses"].as_array().unwrap().iter().map(|w| w["subset"].clone()).collect();
    assert!(subsets.contains(&serde_json::json!([1])));
    assert!(subsets.contains(&serde_json::json!([3])));
}

#[test]
fn trace_orbit_and_separatrices() {
    let out = run(&["trace", &data("quadratic.json"), "--from", "0,0.1", "--theta", "1.5707963267948966", "--t-max", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["trajectory"]["verdict"], "periodic");
    assert!((v["trajectory"]["period"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-6);

    let v = json(&run(&["trace", &data("cubic.json"), "--separatrices"]));
    assert_eq!(v["separatrices"].as_array().unwrap().len(), 4);

    assert_eq!(run(&["trace", &data("cubic.json")]).status.code(), Some(1));
}

#[test]
fn realize_by_code_round_trips_through_portrait() {
    // the path with three vertices, as a code
    let tree = run(&["enumerate", "planar-trees", "3"]);
    let line: Value = serde_json::from_slice(tree.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    let code = line["code"].as_str().unwrap();
    let out = run(&["realize", "planar-tree", code]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let plan = json(&out);
    assert_eq!(plan["verification"]["passed"], true);

    let field = tmp("realized.json");
    std::fs::write(&field, serde_json::to_string(&plan["field"]).unwrap()).unwrap();
    let p = json(&run(&["portrait", field.to_str().unwrap()]));
    assert_eq!(p["codes"]["uncolored"], plan["verification"]["found"][0]);
}

#[test]
fn realize_dual_pair_by_index() {
    let out = run(&["realize", "dual-pair", "0", "--size", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verification"]["duality"], true);
    assert_eq!(run(&["realize", "dual-pair", "99", "--size", "2"]).status.code(), Some(1));
}

#[test]
fn render_writes_svg_file() {
    let path = tmp("cubic.svg");
    let out = run(&["render", &data("cubic.json"), "--charts", "--density", "3", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("chart-z"));
}

#[test]
fn config_override_and_errors() {
    let cfg = tmp("config.json");
    std::fs::write(&cfg, r#"{"separatrix": {"seed_offset": 2e-6}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "classify", &data("cubic.json")]);
    assert_eq!(out.status.code(), Some(0));

    std::fs::write(&cfg, r#"{"separatrix": {"nope": 1}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "classify", &data("cubic.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["stage"], "config");

    assert_eq!(run(&["classify", "/definitely/missing.json"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["count", "planar-trees"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn analysis_failure_has_stage_tag() {
    let out = run(&["analyze", &data("degenerate_quintic.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["stage"], "portrait");
}

#[test]
fn reruns_are_byte_identical() {
    let a = run(&["analyze", &data("two_poles.json")]);
    let b = run(&["analyze", &data("two_poles.json")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
