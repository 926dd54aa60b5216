//! One PASS/FAIL line per headline property of the pipeline.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process fails only when a check outside `KNOWN_GAPS` fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use rrs_core::corpus::load_corpus;
use rrs_core::embedkit::{cosine, distance_family, EmbeddingProvider, EmbeddingVector, FileStore, ModelSimilarity};
use rrs_core::oracle::{brute_force_ted, localized_edit_pair, random_tree};
use rrs_core::scoring::{
    default_grid, median, rrs, score_batch, sensitivity_sweep, PairScore, PairSignals, Quadrant, WeightConfig,
};
use rrs_core::staticval::{
    normalize, parse_clang_tidy, parse_cppcheck_xml, parse_infer_json, summarize, Finding, PairValidation, Severity,
    Taxonomy, Tool, ToolOutcome,
};
use rrs_core::treediff::{structural_scores, ted, EditCostModel};
use rrs_core::parse_function;

// Optimal TED never exceeds the summed cost of editing each change region
// on its own, so LTS equals NTED whenever the global distance is exact.
// Both checks are run as written and expected to fail.
const KNOWN_GAPS: &[&str] = &["localized-vs-global", "condition-rewrite"];

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn ted_oracle() -> Check {
    let start = Instant::now();
    let cost = EditCostModel::default();
    let alphabet = ["a", "b", "c"];
    let mut mismatches = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n1, n2) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_tree(&mut rng, n1, &alphabet);
        let b = random_tree(&mut rng, n2, &alphabet);
        if ted(&a, &b, &cost).unwrap() != brute_force_ted(&a, &b) as f64 {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    check("ted-oracle", mismatches == 0 && t < Duration::from_secs(30), format!("500 pairs, {mismatches} mismatches, {t:.1?}"))
}

fn localized_vs_global() -> Check {
    let start = Instant::now();
    let cost = EditCostModel::default();
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    let (mut lts, mut nted, mut ordered) = (Vec::new(), Vec::new(), 0);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n = rng.random_range(40..=80);
        let (a, b) = localized_edit_pair(&mut rng, n, 0.15, &alphabet);
        let s = structural_scores(&a, &b, &cost).unwrap();
        if s.lts_similarity >= s.nted_similarity {
            ordered += 1;
        }
        lts.push(s.lts_similarity);
        nted.push(s.nted_similarity);
    }
    let gap = median(&lts).unwrap() - median(&nted).unwrap();
    let t = start.elapsed();
    check(
        "localized-vs-global",
        ordered == 200 && gap >= 0.1 && t < Duration::from_secs(10),
        format!("lts >= nted {ordered}/200, median gap {gap:.4} (need >= 0.1), {t:.1?}"),
    )
}

fn condition_rewrite() -> Check {
    let dir = data().join("fixtures/condition_rewrite");
    let p = &load_corpus(&dir.join("pair.jsonl")).unwrap()[0];
    let v = parse_function(&p.vuln_source, p.language_hint).unwrap();
    let b = parse_function(&p.benign_source, p.language_hint).unwrap();
    let sizes_ok = (69..=80).contains(&v.node_count()) && (69..=80).contains(&b.node_count());
    let s = structural_scores(&v, &b, &EditCostModel::default()).unwrap();
    let store = FileStore::open(&dir.join("embeddings.jsonl")).unwrap();
    let cos: Vec<f64> = store
        .model_ids()
        .iter()
        .map(|m| {
            let (x, y) = store.get_pair_embeddings(p, m).unwrap();
            cosine(&x, &y).unwrap()
        })
        .collect();
    let cos_ok = !cos.is_empty() && cos.iter().all(|c| (c - 0.96).abs() <= 1e-9);
    check(
        "condition-rewrite",
        sizes_ok && s.nted_similarity <= 0.5 && s.lts_similarity >= 0.85 && cos_ok,
        format!(
            "nodes {}/{}, nted {:.4} (need <= 0.5), lts {:.4}, cosine 0.96 on {}/{} models",
            v.node_count(),
            b.node_count(),
            s.nted_similarity,
            s.lts_similarity,
            cos.iter().filter(|c| (*c - 0.96).abs() <= 1e-9).count(),
            cos.len()
        ),
    )
}

fn vector_metrics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=64);
        let mut draw = || -> Vec<f64> {
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                if v.iter().any(|x| *x != 0.0) {
                    return v;
                }
            }
        };
        let (xs, ys) = (draw(), draw());
        let k = rng.random_range(0.01..100.0);
        let x = EmbeddingVector::new("m", xs.clone()).unwrap();
        let y = EmbeddingVector::new("m", ys).unwrap();
        let kx = EmbeddingVector::new("m", xs.iter().map(|v| v * k).collect()).unwrap();
        let d = distance_family(&x, &y).unwrap();
        let ok = (cosine(&x, &x).unwrap() - 1.0).abs() <= 1e-9
            && (cosine(&kx, &y).unwrap() - d.cosine).abs() <= 1e-9
            && d.l2 <= d.l1 * (1.0 + 1e-12)
            && d.linf <= d.l2 * (1.0 + 1e-12);
        if !ok {
            bad += 1;
        }
    }
    check("vector-metrics", bad == 0, format!("1000 pairs, {bad} violations"))
}

fn random_weights(rng: &mut ChaCha8Rng) -> WeightConfig {
    let alpha: f64 = rng.random_range(0.0..=1.0);
    let beta = rng.random_range(0.0..=1.0) * (1.0 - alpha);
    WeightConfig { alpha, beta, gamma: (1.0 - alpha - beta).max(0.0) }
}

fn rrs_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let configs: Vec<WeightConfig> = (0..20).map(|_| random_weights(&mut rng)).collect();
    let mut bad = configs.iter().filter(|w| w.validate().is_err()).count();
    for _ in 0..1000 {
        let t: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        for w in &configs {
            let r = rrs(t[0], t[1], t[2], w).unwrap();
            if !(0.0..=1.0).contains(&r) {
                bad += 1;
            }
            for i in 0..3 {
                let mut up = t;
                up[i] = rng.random_range(t[i]..=1.0);
                if rrs(up[0], up[1], up[2], w).unwrap() < r {
                    bad += 1;
                }
            }
        }
    }
    // weights off the simplex are refused
    for w in [[0.5, 0.5, 0.2], [1.2, -0.1, -0.1], [0.3, 0.3, 0.3]] {
        if WeightConfig::new(w[0], w[1], w[2]).is_ok() || rrs(0.5, 0.5, 0.5, &WeightConfig { alpha: w[0], beta: w[1], gamma: w[2] }).is_ok() {
            bad += 1;
        }
    }
    let fixture = rrs(0.98, 0.90, 1.0, &WeightConfig::default()).unwrap();
    let fixture_ok = (fixture - 0.96).abs() <= 1e-9;
    check(
        "rrs-algebra",
        bad == 0 && fixture_ok,
        format!("1000 triples x 20 configs, {bad} violations, fixture {fixture:.12}"),
    )
}

fn sims(cos: &[f64]) -> Vec<ModelSimilarity> {
    cos.iter()
        .enumerate()
        .map(|(i, c)| ModelSimilarity { model_id: format!("m{i}"), cosine: *c, dot: 0.0, l1: 0.0, l2: 0.0, linf: 0.0 })
        .collect()
}

fn signals(id: &str, cos: &[f64], structure: f64) -> PairSignals {
    PairSignals::new(id.to_string(), sims(cos), structure).unwrap()
}

fn agreement_contract() -> Check {
    let w = WeightConfig::default();
    let batch = vec![
        signals("flat", &[0.9, 0.9, 0.9], 0.8),
        signals("wide", &[0.2, 0.9, 0.5], 0.8),
        signals("mid", &[0.7, 0.8, 0.75], 0.8),
    ];
    let (scores, _) = score_batch(batch, &w).unwrap();
    let flat = scores[0].agree == 1.0;
    let widest = scores[1].agree == 0.0;
    let (degenerate, _) =
        score_batch(vec![signals("a", &[0.4, 0.4], 0.1), signals("b", &[0.9, 0.9], 0.7)], &w).unwrap();
    let degen = degenerate.iter().all(|s| s.agree == 1.0);
    check(
        "agreement-contract",
        flat && widest && degen,
        format!("zero spread {}, sigma_max pair {}, degenerate batch {}", scores[0].agree, scores[1].agree, degen),
    )
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<PairSignals> {
    (0..n)
        .map(|i| {
            let cos: Vec<f64> = (0..5).map(|_| rng.random_range(0.5..1.0)).collect();
            signals(&format!("p{i:03}"), &cos, rng.random())
        })
        .collect()
}

fn quadrant_partition() -> Check {
    let w = WeightConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sums_ok = true;
    for _ in 0..50 {
        let n = rng.random_range(1..=60);
        let (scores, _) = score_batch(random_batch(&mut rng, n), &w).unwrap();
        let mut counts = BTreeMap::new();
        for s in &scores {
            *counts.entry(s.quadrant).or_insert(0usize) += 1;
        }
        sums_ok &= counts.values().sum::<usize>() == n;
    }
    let (scores, _) = score_batch(random_batch(&mut rng, 100), &w).unwrap();
    let high_e = scores.iter().filter(|s| matches!(s.quadrant, Quadrant::I | Quadrant::II)).count();
    let high_a = scores.iter().filter(|s| matches!(s.quadrant, Quadrant::I | Quadrant::III)).count();
    check(
        "quadrant-partition",
        sums_ok && high_e >= 50 && high_a >= 50,
        format!("counts sum to batch size: {sums_ok}; 100-pair batch High E {high_e}, High A {high_a}"),
    )
}

fn sweep_stability() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let batch: Vec<PairSignals> = (0..50)
        .map(|i| {
            let v: f64 = rng.random();
            let mut s = signals(&format!("p{i:02}"), &[v; 5], 0.0);
            s.struct_sim = s.mean_sem;
            s
        })
        .collect();
    let (scores, _): (Vec<PairScore>, _) = score_batch(batch, &WeightConfig::default()).unwrap();
    let equal = scores.iter().all(|s| s.mean_sem == s.struct_sim);
    let sweep = sensitivity_sweep(&scores, &default_grid()).unwrap();
    let all_one = sweep.spearman.iter().flatten().all(|r| *r == 1.0);
    let min = sweep.spearman.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    check(
        "sweep-stability",
        equal && all_one && sweep.configs.len() == 5,
        format!("{} configs, min spearman {min}", sweep.configs.len()),
    )
}

fn analyzers() -> PathBuf {
    data().join("fixtures/analyzers")
}

fn fixture(tool: Tool, name: &str) -> Vec<Finding> {
    let dir = analyzers();
    let read = |sub: &str, ext: &str| std::fs::read_to_string(dir.join(format!("{sub}/{name}.{ext}"))).unwrap();
    let raw = match tool {
        Tool::Cppcheck => parse_cppcheck_xml(&read("cppcheck", "xml")).unwrap(),
        Tool::ClangTidy => parse_clang_tidy(&read("clang_tidy", "txt")),
        Tool::Infer => parse_infer_json(&read("infer", "json")).unwrap(),
    };
    normalize(raw, 0, &Taxonomy::default())
}

fn static_validation() -> Check {
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(analyzers().join("expected.json")).unwrap()).unwrap();
    let mut per_tool = Vec::new();
    let mut mismatches = 0;
    for (tool, key) in [(Tool::Cppcheck, "cppcheck"), (Tool::ClangTidy, "clang_tidy"), (Tool::Infer, "infer")] {
        let cases = expected[key].as_object().unwrap();
        per_tool.push(cases.len());
        for (name, want) in cases {
            let want: BTreeSet<&str> = want.as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
            let got = fixture(tool, name);
            if got.iter().map(|f| f.category.as_str()).collect::<BTreeSet<_>>() != want {
                mismatches += 1;
            }
        }
    }
    let pairs: Value = serde_json::from_str(&std::fs::read_to_string(analyzers().join("summary_pairs.json")).unwrap()).unwrap();
    let set: Vec<PairValidation> = pairs
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            let outcomes = [(Tool::Cppcheck, "cppcheck"), (Tool::ClangTidy, "clang_tidy"), (Tool::Infer, "infer")]
                .into_iter()
                .map(|(tool, key)| {
                    let o = match p[key].as_str() {
                        Some(name) => ToolOutcome::Findings { findings: fixture(tool, name) },
                        None => ToolOutcome::Unavailable { reason: "not installed".into() },
                    };
                    (tool, o)
                })
                .collect();
            PairValidation { pair_id: p["pair_id"].as_str().unwrap().to_string(), outcomes }
        })
        .collect();
    let s = summarize(&set, &Tool::ALL, Severity::Warning).unwrap();
    let nested = s.pct_flagged_all <= s.pct_flagged_two && s.pct_flagged_two <= s.pct_flagged_any;
    check(
        "static-validation",
        mismatches == 0 && per_tool.iter().all(|n| *n >= 10) && set.len() == 20 && nested,
        format!(
            "fixtures per tool {per_tool:?}, {mismatches} mismatches; 20-pair set all {:.1}% <= two {:.1}% <= any {:.1}%",
            s.pct_flagged_all, s.pct_flagged_two, s.pct_flagged_any
        ),
    )
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let config = data().join("mini/run.toml");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let res = Command::new(env!("CARGO_BIN_EXE_rrs"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap();
        if !res.status.success() {
            let err = String::from_utf8_lossy(&res.stderr);
            return check("end-to-end-determinism", false, format!("rrs run exited with {}: {}", res.status, err.trim()));
        }
        outputs.push(std::fs::read(out.join("scores.csv")).unwrap());
    }
    let t = start.elapsed();
    let rows = outputs[0].iter().filter(|b| **b == b'\n').count() - 1;
    let same = outputs[0] == outputs[1];
    check(
        "end-to-end-determinism",
        same && rows == 12 && t < Duration::from_secs(20),
        format!("scores.csv identical {same}, {rows} rows, {t:.1?} for two runs"),
    )
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored; a filter
    // that names another test skips this target
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let checks = [
        ted_oracle(),
        localized_vs_global(),
        condition_rewrite(),
        vector_metrics(),
        rrs_algebra(),
        agreement_contract(),
        quadrant_partition(),
        sweep_stability(),
        static_validation(),
        end_to_end(),
    ];
    let mut unexpected = 0;
    for c in &checks {
        let known = KNOWN_GAPS.contains(&c.name);
        let note = if !c.pass && known { " (known gap)" } else { "" };
        println!("{} {:<24} {}{note}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.pass && !known {
            unexpected += 1;
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} passed, {unexpected} unexpected failures", checks.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
