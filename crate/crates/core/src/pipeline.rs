//! Declarative end-to-end runs: corpus, parse, diff, embed, score, sweep,
//! validate, report, and a manifest that pins every input.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{filter_pairs, load_corpus, CorpusFilterConfig, DropReason, FunctionPair, ParsedPair};
use crate::embedkit::{pair_similarities, EmbeddingProvider, FileStore, HttpConfig, HttpProvider, MockProvider, ProviderKind, EMBED_URL_ENV};
use crate::report::{emit_plot_data, emit_rank_report, ranked, render_markdown, write_plot_csv, write_rank_csv, PlotWhich, SummaryContext};
use crate::scoring::{default_grid, score_batch, sensitivity_sweep, write_scores, PairScore, PairSignals, Quadrant, WeightConfig};
use crate::staticval::{summarize, validate_pairs, PairValidation, Severity, Taxonomy, Tool, ValidationSummary};
use crate::treediff::{structural_scores, EditCostModel, StructuralScores};
use crate::parse_function;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad or missing configuration; `field` names the offending key.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        PipelineError::Config { field: field.into(), message: message.into() }
    }

    pub fn stage(stage: &'static str, message: impl ToString) -> Self {
        PipelineError::Stage { stage, message: message.to_string() }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Model ids; the mock falls back to its five defaults when empty.
    #[serde(default)]
    pub model_ids: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Embedding store file (file_store only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    /// Service base URL (http_service only); falls back to the env var.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

fn default_dim() -> usize {
    64
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig { kind: ProviderKind::Mock, model_ids: vec![], seed: 0, dim: default_dim(), store: None, url: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub enabled: bool,
    /// Extra configs beyond the five defaults, as `[alpha, beta, gamma]`.
    pub extra: Vec<[f64; 3]>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { enabled: true, extra: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub enabled: bool,
    pub tools: Vec<Tool>,
    pub timeout_secs: u64,
    pub quadrant: Quadrant,
    /// At most this many pairs, highest RRS first.
    pub top_k: usize,
    pub min_severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<PathBuf>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            enabled: false,
            tools: Tool::ALL.to_vec(),
            timeout_secs: 120,
            quadrant: Quadrant::I,
            top_k: 50,
            min_severity: Severity::Warning,
            taxonomy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub top_k: usize,
    pub plots: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { top_k: 20, plots: true }
    }
}

/// Contents of a run config file. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub weights: WeightConfig,
    #[serde(default)]
    pub filter: CorpusFilterConfig,
    pub provider: ProviderConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::config("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            // toml reports the key path in its message; keep it as the field
            let field = e.message().split('`').nth(1).unwrap_or("config").to_string();
            PipelineError::Config { field, message: e.to_string() }
        })?;
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.corpus);
        abs(&mut self.output_dir);
        if let Some(s) = self.provider.store.as_mut() {
            abs(s);
        }
        if let Some(t) = self.validate.taxonomy.as_mut() {
            abs(t);
        }
    }

    /// Checks everything that can be checked before touching data.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.weights.validate().map_err(|e| PipelineError::config("weights", e.to_string()))?;
        self.filter.validate().map_err(|e| PipelineError::config("filter.max_ast_nodes", e.to_string()))?;
        if !self.corpus.is_file() {
            return Err(PipelineError::config("corpus", format!("{} does not exist", self.corpus.display())));
        }
        match self.provider.kind {
            ProviderKind::FileStore => match &self.provider.store {
                None => return Err(PipelineError::config("provider.store", "required when provider.kind = \"file_store\"")),
                Some(p) if !p.is_file() => {
                    return Err(PipelineError::config("provider.store", format!("{} does not exist", p.display())))
                }
                Some(_) => {}
            },
            ProviderKind::HttpService => {
                if self.provider.model_ids.is_empty() {
                    return Err(PipelineError::config("provider.model_ids", "required when provider.kind = \"http_service\""));
                }
                if self.provider.url.is_none() && std::env::var(EMBED_URL_ENV).is_err() {
                    return Err(PipelineError::config("provider.url", format!("not set and {EMBED_URL_ENV} is unset")));
                }
            }
            ProviderKind::Mock => {
                if self.provider.dim == 0 {
                    return Err(PipelineError::config("provider.dim", "must be at least 1"));
                }
            }
        }
        for (i, w) in self.sweep.extra.iter().enumerate() {
            WeightConfig::new(w[0], w[1], w[2]).map_err(|e| PipelineError::config(&format!("sweep.extra[{i}]"), e.to_string()))?;
        }
        if self.validate.enabled {
            if self.validate.tools.is_empty() {
                return Err(PipelineError::config("validate.tools", "at least one tool is required"));
            }
            if self.validate.timeout_secs == 0 {
                return Err(PipelineError::config("validate.timeout_secs", "must be positive"));
            }
            if self.validate.top_k == 0 {
                return Err(PipelineError::config("validate.top_k", "must be at least 1"));
            }
        }
        if self.report.top_k == 0 {
            return Err(PipelineError::config("report.top_k", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn build_provider(cfg: &ProviderConfig) -> Result<Box<dyn EmbeddingProvider>, PipelineError> {
    match cfg.kind {
        ProviderKind::Mock => Ok(Box::new(if cfg.model_ids.is_empty() {
            MockProvider::new(cfg.seed, cfg.dim, crate::embedkit::DEFAULT_MODELS.iter().map(|m| m.to_string()).collect())
        } else {
            MockProvider::new(cfg.seed, cfg.dim, cfg.model_ids.clone())
        })),
        ProviderKind::FileStore => {
            let path = cfg.store.as_ref().ok_or_else(|| PipelineError::config("provider.store", "required for file_store"))?;
            if !path.is_file() {
                return Err(PipelineError::config("provider.store", format!("{} does not exist", path.display())));
            }
            let store = FileStore::open(path).map_err(|e| PipelineError::stage("embed", e))?;
            if !cfg.model_ids.is_empty() && cfg.model_ids != store.model_ids() {
                return Err(PipelineError::config(
                    "provider.model_ids",
                    format!("store serves {:?}", store.model_ids()),
                ));
            }
            Ok(Box::new(store))
        }
        ProviderKind::HttpService => {
            let http = match &cfg.url {
                Some(u) => HttpConfig::new(u.clone(), cfg.model_ids.clone()),
                None => HttpConfig::from_env(cfg.model_ids.clone()).map_err(|e| PipelineError::config("provider.url", e.to_string()))?,
            };
            Ok(Box::new(HttpProvider::new(http).map_err(|e| PipelineError::config("provider.url", e.to_string()))?))
        }
    }
}

/// Parses both sides of every pair on the rayon pool.
pub fn parse_pairs(pairs: &[FunctionPair]) -> HashMap<String, ParsedPair> {
    pairs
        .par_iter()
        .map(|p| {
            let parsed = parse_function(&p.vuln_source, p.language_hint)
                .map_err(|e| format!("vuln: {e}"))
                .and_then(|v| parse_function(&p.benign_source, p.language_hint).map(|b| (v, b)).map_err(|e| format!("benign: {e}")));
            (p.pair_id.clone(), parsed)
        })
        .collect()
}

/// Per-pair structural metrics and tree sizes.
#[derive(Debug, Clone, Serialize)]
pub struct PairStructure {
    pub pair_id: String,
    pub vuln_nodes: usize,
    pub benign_nodes: usize,
    #[serde(flatten)]
    pub scores: StructuralScores,
}

/// Pass one: structure and per-model similarities for every kept pair, in
/// input order. Pair-parallel.
pub fn compute_signals(
    kept: &[FunctionPair],
    trees: &HashMap<String, ParsedPair>,
    provider: &dyn EmbeddingProvider,
    cost: &EditCostModel,
) -> Result<Vec<(PairSignals, PairStructure)>, PipelineError> {
    kept.par_iter()
        .map(|p| {
            let (v, b) = match trees.get(&p.pair_id) {
                Some(Ok(t)) => t,
                Some(Err(e)) => return Err(PipelineError::stage("diff", format!("{}: no tree ({e})", p.pair_id))),
                None => return Err(PipelineError::stage("diff", format!("{}: not parsed", p.pair_id))),
            };
            let s = structural_scores(v, b, cost).map_err(|e| PipelineError::stage("diff", format!("{}: {e}", p.pair_id)))?;
            let sims = pair_similarities(provider, p).map_err(|e| PipelineError::stage("embed", format!("{}: {e}", p.pair_id)))?;
            let signals = PairSignals::new(p.pair_id.clone(), sims, s.lts_similarity)
                .map_err(|e| PipelineError::stage("score", format!("{}: {e}", p.pair_id)))?;
            Ok((
                signals,
                PairStructure { pair_id: p.pair_id.clone(), vuln_nodes: v.node_count(), benign_nodes: b.node_count(), scores: s },
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct StageCounts {
    pub loaded: usize,
    pub parse_failed: usize,
    pub dropped_size: usize,
    pub dropped_parse: usize,
    pub kept: usize,
    pub scored: usize,
    pub quadrants: [usize; 4],
    pub validation_selected: usize,
    pub validation_analyzed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProviderManifest {
    pub kind: ProviderKind,
    pub model_ids: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

/// Everything needed to reproduce a run given the same corpus and store.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub corpus: String,
    pub corpus_sha256: String,
    pub weights: WeightConfig,
    pub provider: ProviderManifest,
    pub filter: CorpusFilterConfig,
    pub sweep: SweepConfig,
    pub validate: ValidateConfig,
    pub report: ReportConfig,
    pub started_at: String,
    pub finished_at: String,
    pub counts: StageCounts,
    /// Non-fatal problems (validation failures degrade to these).
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, std::io::Error> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub scores: Vec<PairScore>,
    pub validation: Option<ValidationSummary>,
}

struct Out<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Out<'_> {
    fn file(&mut self, name: &str, stage: &'static str, f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| PipelineError::stage(stage, format!("{name}: {e}")))?;
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, buf).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Highest-RRS pairs of the chosen quadrant, at most `top_k`.
pub fn select_for_validation(scores: &[PairScore], quadrant: Quadrant, top_k: usize) -> Vec<&PairScore> {
    ranked(scores).into_iter().filter(|s| s.quadrant == quadrant).take(top_k).collect()
}

/// Scored batch plus the bookkeeping the run writes next to it.
#[derive(Debug, Clone)]
pub struct ScoredBatch {
    /// Corpus order.
    pub scores: Vec<PairScore>,
    pub structure: Vec<PairStructure>,
    pub dropped: Vec<(String, DropReason)>,
    pub kept: Vec<FunctionPair>,
    pub parse_failed: usize,
}

/// Parse, filter, diff, embed and score. Fails if any kept pair cannot be
/// scored.
pub fn score_pairs(
    pairs: &[FunctionPair],
    filter: &CorpusFilterConfig,
    provider: &dyn EmbeddingProvider,
    weights: &WeightConfig,
) -> Result<ScoredBatch, PipelineError> {
    let trees = parse_pairs(pairs);
    let parse_failed = trees.values().filter(|t| t.is_err()).count();
    let filtered = filter_pairs(pairs, &trees, filter);
    if filtered.kept.is_empty() {
        return Err(PipelineError::stage("corpus", "no pairs left after filtering"));
    }
    let computed = compute_signals(&filtered.kept, &trees, provider, &EditCostModel::default())?;
    let (signals, structure): (Vec<PairSignals>, Vec<PairStructure>) = computed.into_iter().unzip();
    let (scores, _) = score_batch(signals, weights).map_err(|e| PipelineError::stage("score", e))?;
    Ok(ScoredBatch { scores, structure, dropped: filtered.dropped, kept: filtered.kept, parse_failed })
}

pub fn write_structure<W: Write>(out: W, rows: &[PairStructure]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_id", "vuln_nodes", "benign_nodes", "ted", "local_ted", "nted", "lts", "jaccard", "align_sim"])?;
    for s in rows {
        let c = &s.scores;
        w.write_record([
            s.pair_id.clone(),
            s.vuln_nodes.to_string(),
            s.benign_nodes.to_string(),
            c.ted_ops.to_string(),
            c.local_ted_ops.to_string(),
            c.nted_similarity.to_string(),
            c.lts_similarity.to_string(),
            c.jaccard.to_string(),
            c.align_sim.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Results of the static-validation stage. Tool problems never fail the
/// stage; they end up in `warnings`.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub selected: usize,
    pub results: Vec<PairValidation>,
    pub summary: Option<ValidationSummary>,
    pub warnings: Vec<String>,
}

pub fn run_validation(
    scores: &[PairScore],
    pairs: &[FunctionPair],
    cfg: &ValidateConfig,
    taxonomy: &Taxonomy,
) -> Result<ValidationRun, PipelineError> {
    let by_id: HashMap<&str, &FunctionPair> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let chosen = select_for_validation(scores, cfg.quadrant, cfg.top_k);
    let items = chosen
        .iter()
        .map(|s| {
            by_id
                .get(s.pair_id.as_str())
                .map(|p| (p.pair_id.clone(), p.benign_source.clone(), p.language_hint))
                .ok_or_else(|| PipelineError::stage("validate", format!("{} is not in the corpus", s.pair_id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results = validate_pairs(&items, &cfg.tools, taxonomy, Duration::from_secs(cfg.timeout_secs));
    let mut warnings = tool_problems(&results);
    let summary = match summarize(&results, &cfg.tools, cfg.min_severity) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("validate: {e}"));
            None
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ValidationRun { selected: items.len(), results, summary, warnings })
}

pub fn write_findings<W: Write>(mut out: W, results: &[PairValidation]) -> Result<(), std::io::Error> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn json_pretty<T: Serialize>(b: &mut Vec<u8>, value: &T) -> Result<(), String> {
    serde_json::to_writer_pretty(&mut *b, value).map_err(|e| e.to_string())?;
    b.push(b'\n');
    Ok(())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let started_at = now();
    let mut counts = StageCounts::default();
    let mut warnings = Vec::new();

    let provider = build_provider(&cfg.provider)?;
    let taxonomy = match &cfg.validate.taxonomy {
        Some(p) if cfg.validate.enabled => Taxonomy::from_file(p).map_err(|e| PipelineError::config("validate.taxonomy", e.to_string()))?,
        _ => Taxonomy::default(),
    };

    let pairs = load_corpus(&cfg.corpus).map_err(|e| PipelineError::stage("corpus", e))?;
    let corpus_sha256 = sha256_file(&cfg.corpus).map_err(|e| PipelineError::stage("corpus", e))?;
    log::info!("loaded {} pairs from {}", pairs.len(), cfg.corpus.display());

    let batch = score_pairs(&pairs, &cfg.filter, provider.as_ref(), &cfg.weights)?;
    counts.loaded = pairs.len();
    counts.parse_failed = batch.parse_failed;
    counts.dropped_size = batch.dropped.iter().filter(|(_, r)| *r == DropReason::Size).count();
    counts.dropped_parse = batch.dropped.iter().filter(|(_, r)| *r == DropReason::Parse).count();
    counts.kept = batch.kept.len();
    counts.scored = batch.scores.len();
    counts.quadrants = crate::report::quadrant_counts(&batch.scores);
    let scores = &batch.scores;

    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| PipelineError::config("output_dir", format!("{}: {e}", cfg.output_dir.display())))?;
    let mut out = Out { dir: &cfg.output_dir, written: vec![] };

    out.file("scores.csv", "score", |b| write_scores(b, scores).map_err(|e| e.to_string()))?;
    out.file("structure.csv", "diff", |b| write_structure(b, &batch.structure).map_err(|e| e.to_string()))?;
    out.file("dropped.csv", "corpus", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["pair_id", "reason"]).map_err(|e| e.to_string())?;
        for (id, r) in &batch.dropped {
            w.write_record([id.as_str(), &r.to_string()]).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    })?;

    if cfg.sweep.enabled {
        let mut grid = default_grid();
        grid.extend(cfg.sweep.extra.iter().map(|w| WeightConfig { alpha: w[0], beta: w[1], gamma: w[2] }));
        let sweep = sensitivity_sweep(scores, &grid).map_err(|e| PipelineError::stage("sweep", e))?;
        out.file("sweep.json", "sweep", |b| json_pretty(b, &sweep))?;
    }

    let mut validation = None;
    if cfg.validate.enabled {
        let v = run_validation(scores, &batch.kept, &cfg.validate, &taxonomy)?;
        counts.validation_selected = v.selected;
        out.file("findings.jsonl", "validate", |b| write_findings(b, &v.results).map_err(|e| e.to_string()))?;
        if let Some(s) = &v.summary {
            counts.validation_analyzed = s.n_analyzed;
            out.file("summary.json", "validate", |b| json_pretty(b, s))?;
        }
        warnings.extend(v.warnings);
        validation = v.summary;
    }

    let rank = emit_rank_report(scores, cfg.report.top_k).map_err(|e| PipelineError::stage("report", e))?;
    out.file("ranking.csv", "report", |b| write_rank_csv(b, &rank).map_err(|e| e.to_string()))?;
    let ctx = SummaryContext { weights: Some(cfg.weights), validation: validation.as_ref() };
    let md = render_markdown(scores, cfg.report.top_k, &ctx).map_err(|e| PipelineError::stage("report", e))?;
    out.file("report.md", "report", |b| b.write_all(md.as_bytes()).map_err(|e| e.to_string()))?;
    if cfg.report.plots {
        for which in PlotWhich::ALL {
            let series = emit_plot_data(scores, which).map_err(|e| PipelineError::stage("report", e))?;
            out.file(&format!("plots/{}.csv", which.name()), "report", |b| write_plot_csv(b, &series).map_err(|e| e.to_string()))?;
        }
    }

    let mock = cfg.provider.kind == ProviderKind::Mock;
    let provider_manifest = ProviderManifest {
        kind: cfg.provider.kind,
        model_ids: provider.model_ids().to_vec(),
        seed: mock.then_some(cfg.provider.seed),
        dim: mock.then_some(cfg.provider.dim),
        store: cfg.provider.store.as_ref().map(|p| p.display().to_string()),
        store_sha256: match &cfg.provider.store {
            Some(p) => Some(sha256_file(p).map_err(|e| PipelineError::stage("embed", e))?),
            None => None,
        },
        url: cfg.provider.url.clone(),
    };
    let mut artifacts = out.written.clone();
    artifacts.push("manifest.json".into());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        corpus: cfg.corpus.display().to_string(),
        corpus_sha256,
        weights: cfg.weights,
        provider: provider_manifest,
        filter: cfg.filter,
        sweep: cfg.sweep.clone(),
        validate: cfg.validate.clone(),
        report: cfg.report.clone(),
        started_at,
        finished_at: now(),
        counts,
        warnings,
        artifacts,
    };
    out.file("manifest.json", "report", |b| json_pretty(b, &manifest))?;
    Ok(RunOutcome { manifest, scores: batch.scores, validation })
}

fn tool_problems(results: &[PairValidation]) -> Vec<String> {
    use crate::staticval::ToolOutcome;
    use std::collections::BTreeMap;
    let mut tally: BTreeMap<(Tool, &str), usize> = BTreeMap::new();
    for r in results {
        for (tool, o) in &r.outcomes {
            let what = match o {
                ToolOutcome::Findings { .. } => continue,
                ToolOutcome::Unavailable { .. } => "unavailable",
                ToolOutcome::Timeout => "timed out",
                ToolOutcome::Failed { .. } => "failed",
            };
            *tally.entry((*tool, what)).or_default() += 1;
        }
    }
    tally.into_iter().map(|((tool, what), n)| format!("validate: {tool} {what} on {n} pair(s)")).collect()
}
