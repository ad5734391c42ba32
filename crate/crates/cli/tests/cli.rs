use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csg-compress")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fixture", "--dir", dir.path().to_str().unwrap(), "--cloud-points", "20000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn compress_reports_are_reproducible() {
    let d = fixtures();
    let args = ["compress", "--primitives", &path(d.path(), "scene_primitives.json"), "--truth", &path(d.path(), "scene_truth.json"), "--seed", "3", "--no-timestamp"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    assert_eq!(report["leaf_count"], 10);
    assert_eq!(report["two_level_leaf_count"], 25);
    assert_eq!(report["n_f"], 15);
    assert_eq!(report["global_bound"], "32767");
    assert!(report["timestamp"].is_null());
    let stamped = json(&run(&args[..args.len() - 1]));
    assert!(stamped["timestamp"].is_u64());
}

#[test]
fn compress_from_cloud_and_abstract() {
    let d = fixtures();
    let tree = path(d.path(), "tree.json");
    let out = run(&["compress", "--primitives", &path(d.path(), "scene_primitives.json"), "--cloud", &path(d.path(), "scene_cloud.xyz"), "--tree-out", &tree, "--no-timestamp"]);
    assert_eq!(json(&out)["leaf_count"], 10);
    let eval = json(&run(&["eval", "--primitives", &path(d.path(), "scene_primitives.json"), "--truth", &path(d.path(), "scene_truth.json"), "--tree", &tree]));
    assert!(eval["agreement"].as_f64().unwrap() >= 0.999);

    let out = run(&["compress", "--abstract", &path(d.path(), "scene_abstract.json"), "--solver", "qubo_sa", "--format", "text", "--no-timestamp"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("total_literals: 10"), "{text}");
    assert!(text.contains("warnings: []"));
}

#[test]
fn cover_solvers_agree_on_the_example() {
    let d = fixtures();
    let inst = path(d.path(), "cover_example.json");
    for solver in ["dlx", "qubo_exact", "qubo_sa"] {
        let v = json(&run(&["cover", "--instance", &inst, "--solver", solver, "--penalty-a", "6", "--penalty-b", "1"]));
        assert_eq!(v["selected"], serde_json::json!(["V1", "V5", "V7"]), "{solver}");
    }
}

#[test]
fn qubo_export_then_solve() {
    let d = fixtures();
    let model = path(d.path(), "cover.qubo");
    let out = run(&["qubo", "export", "--instance", &path(d.path(), "cover_example.json"), "--penalty-a", "6", "--penalty-b", "1", "--out", &model]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("c offset 3.0"));
    assert!(text.contains("p qubo 0 7 7"));
    for solver in ["exact", "sa"] {
        let v = json(&run(&["qubo", "solve", "--model", &model, "--solver", solver, "--seed", "9"]));
        assert_eq!(v["energy"], 3.0);
        assert_eq!(v["assignment"], "1000101");
    }
    let clique_model = path(d.path(), "clique.qubo");
    assert!(run(&["qubo", "export", "--graph", &path(d.path(), "scene_graph.json"), "--out", &clique_model]).status.success());
    assert_eq!(json(&run(&["qubo", "solve", "--model", &clique_model, "--solver", "exact"]))["energy"], -3.0);
}

#[test]
fn cliques_and_products() {
    let d = fixtures();
    for method in ["bk", "qubo_sa_experimental"] {
        let v = json(&run(&["cliques", "--graph", &path(d.path(), "scene_graph.json"), "--method", method, "--schedule", "sweeps=300,restarts=4"]));
        assert_eq!(v["cliques"], serde_json::json!([["B", "C", "D"], ["B", "D", "E"], ["A", "B"], ["E", "F"]]), "{method}");
    }
    let abs = path(d.path(), "table_abstract.json");
    let v = json(&run(&["products", "--primitives", &path(d.path(), "scene_primitives.json"), "--truth", &path(d.path(), "scene_truth.json"), "--samples", "512", "--abstract-out", &abs]));
    assert_eq!(v["n_f"], 15);
    assert_eq!(v["universe"].as_array().unwrap().len(), 8);
    assert!(json(&run(&["compress", "--abstract", &abs, "--no-timestamp"]))["leaf_count"] == 10);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = path(d.path(), name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let unsat = write("unsat.json", r#"{"universe":["a","b","c"],"subsets":[{"name":"s","covers":["a","b"]},{"name":"t","covers":["b","c"]}]}"#);
    assert_eq!(run(&["cover", "--instance", &unsat]).status.code(), Some(2));
    let uncovered = write("uncovered.json", r#"{"universe":["a","b"],"subsets":[{"name":"s","covers":["a"]}]}"#);
    assert_eq!(run(&["cover", "--instance", &uncovered]).status.code(), Some(2));
    let broken = write("broken.json", "{ not json");
    assert_eq!(run(&["cover", "--instance", &broken]).status.code(), Some(3));
    assert_eq!(run(&["cover", "--instance", &path(d.path(), "missing.json")]).status.code(), Some(3));
    let dup = write("dup.qubo", "p qubo 0 2 0 2\n0 1 1.0\n0 1 1.0\n");
    let out = run(&["qubo", "solve", "--model", &dup]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let ok = write("ok.json", r#"{"universe":[1,2],"subsets":[{"name":"s","covers":[1,2]}]}"#);
    assert_eq!(run(&["cover", "--instance", &ok, "--solver", "qubo_exact", "--penalty-a", "1", "--penalty-b", "1"]).status.code(), Some(4));
    assert_eq!(run(&["cover", "--instance", &ok, "--solver", "magic"]).status.code(), Some(4));
    assert_eq!(run(&["cover", "--instance", &ok, "--schedule", "sweeps=lots"]).status.code(), Some(4));
    assert_eq!(run(&["cover", "--bogus-flag"]).status.code(), Some(4));
    assert_eq!(run(&["cover", "--instance", &ok]).status.code(), Some(0));
}
