use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrs")).args(args).env_remove("RUST_LOG").output().unwrap()
}

fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini")
}

fn corpus() -> String {
    mini().join("corpus.jsonl").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn corpus_commands() {
    let o = rrs(&["corpus", "validate", &corpus()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "ok: 12 pairs");
    let stats: serde_json::Value = serde_json::from_str(&stdout(&rrs(&["corpus", "stats", &corpus()]))).unwrap();
    assert_eq!(stats["pairs"], 12);
    assert_eq!(stats["by_language"]["cpp"], 1);
}

#[test]
fn bad_inputs_exit_2() {
    assert_eq!(rrs(&["corpus", "validate", "/nonexistent.jsonl"]).status.code(), Some(2));
    assert_eq!(rrs(&["run", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    let o = rrs(&["score", &corpus(), "--embeddings", "/nonexistent/store.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("provider.store"));
    assert_eq!(rrs(&["score", &corpus(), "--weights", "0.5,0.5,0.5"]).status.code(), Some(2));
}

#[test]
fn stage_failure_exits_3() {
    // every pair is over the size cap
    let o = rrs(&["score", &corpus(), "--max-nodes", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn diff_reports_regions() {
    let o = rrs(&["diff", &corpus(), "--pair", "mini-03-version", "--emit-regions"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["lts_similarity"].as_f64().unwrap() >= v["nted_similarity"].as_f64().unwrap());
    let texts: Vec<&str> = v["regions"].as_array().unwrap().iter().filter_map(|r| r["vuln"]["text"].as_str()).collect();
    assert!(texts.contains(&"get_version(s)"), "{texts:?}");

    let o = rrs(&["diff", &corpus(), "--pair", "mini-03-version", "--metric", "jaccard"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.get("jaccard").is_some() && v.get("ted_ops").is_none());
    assert_eq!(rrs(&["diff", &corpus(), "--pair", "nope"]).status.code(), Some(2));
}

#[test]
fn ast_dump_is_an_sexpr() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.c");
    std::fs::write(&f, "int f(int x) { return x + 1; }\n").unwrap();
    let o = rrs(&["ast", "dump", f.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("(translation_unit (function_definition"), "{s}");
    assert!(s.contains("\"x\""), "{s}");
}

#[test]
fn precompute_score_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    assert!(rrs(&["embed", "precompute", &corpus(), "--seed", "3", "--out", &p("store.jsonl")]).status.success());
    assert!(rrs(&["score", &corpus(), "--embeddings", &p("store.jsonl"), "--out", &p("a.csv")]).status.success());
    assert!(rrs(&["score", &corpus(), "--seed", "3", "--out", &p("b.csv")]).status.success());
    assert_eq!(std::fs::read(p("a.csv")).unwrap(), std::fs::read(p("b.csv")).unwrap());

    let o = rrs(&["report", &p("a.csv"), "--out", &p("report.md"), "--plots", &p("plots")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = std::fs::read_to_string(p("report.md")).unwrap();
    assert!(md.contains("| Quadrant | RRS | Pairs | (%) | Behavioral Interpretation |"));
    for which in ["lts_hist", "sem_struct_scatter", "multisignal_bars", "model_consistency"] {
        assert!(dir.path().join(format!("plots/{which}.csv")).is_file(), "{which}");
    }

    let o = rrs(&["sweep", &corpus(), "--grid", "default", "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["configs"].as_array().unwrap().len(), 5);
    assert_eq!(v["spearman"][0][0], 1.0);
}

#[test]
fn validate_degrades_without_tools() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    assert!(rrs(&["score", &corpus(), "--out", &p("s.csv")]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_rrs"))
        .args(["validate", &p("s.csv"), "--corpus", &corpus(), "--tools", "infer", "--timeout", "5", "--out-dir", &p("v")])
        .env("RRS_INFER_BIN", "/nonexistent/infer")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let findings = std::fs::read_to_string(p("v/findings.jsonl")).unwrap();
    assert!(findings.lines().all(|l| l.contains("\"unavailable\"")));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("v/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_analyzed"], 0);
}

#[test]
fn run_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini().join("run.toml");
    let out = dir.path().join("out");
    let o = rrs(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--weights",
        "0.4,0.4,0.2",
        "--seed",
        "99",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["weights"]["alpha"], 0.4);
    assert_eq!(m["provider"]["seed"], 99);
    assert_eq!(m["counts"]["scored"], 12);
}
