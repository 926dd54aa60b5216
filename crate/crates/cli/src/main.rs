use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rrs_core::astkit::to_sexpr;
use rrs_core::corpus::{corpus_stats, load_corpus};
use rrs_core::embedkit::{precompute_store, write_store, ProviderKind};
use rrs_core::pipeline::{
    build_provider, run_pipeline, run_validation, score_pairs, write_findings, PipelineError, ProviderConfig, RunConfig,
    ValidateConfig,
};
use rrs_core::report::{emit_plot_data, render_markdown, write_plot_csv, PlotWhich, SummaryContext};
use rrs_core::scoring::{default_grid, read_scores, sensitivity_sweep, write_scores, Quadrant, WeightConfig};
use rrs_core::staticval::{Severity, Taxonomy, Tool};
use rrs_core::treediff::{isolate_change_regions, structural_scores, EditCostModel};
use rrs_core::{parse_function, CorpusFilterConfig, LanguageHint};

type CmdResult = Result<(), PipelineError>;

#[derive(Parser)]
#[command(name = "rrs", version, about = "Residual risk scoring for patched C/C++ functions")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect a pair corpus.
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
    /// Syntax tree utilities.
    Ast {
        #[command(subcommand)]
        cmd: AstCmd,
    },
    /// Structural metrics for one pair, as JSON.
    Diff(DiffArgs),
    /// Embedding store utilities.
    Embed {
        #[command(subcommand)]
        cmd: EmbedCmd,
    },
    /// Score every pair of a corpus and write the score table.
    Score(ScoreArgs),
    /// Rank stability across weight configurations.
    Sweep(SweepArgs),
    /// Run static analyzers on the benign side of top-ranked pairs.
    Validate(ValidateArgs),
    /// Markdown report and plot series from a score table.
    Report(ReportArgs),
    /// Full pipeline from a config file.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Check that every line is a well-formed pair.
    Validate { path: PathBuf },
    Stats { path: PathBuf },
}

#[derive(Subcommand)]
enum AstCmd {
    /// Print the tree of one source file as an S-expression.
    Dump {
        file: PathBuf,
        /// Defaults from the extension.
        #[arg(long)]
        lang: Option<LanguageHint>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Nted,
    Lts,
    Jaccard,
    Align,
    All,
}

#[derive(Args)]
struct DiffArgs {
    corpus: PathBuf,
    #[arg(long)]
    pair: String,
    #[arg(long, value_enum, default_value = "all")]
    metric: Metric,
    /// Also print the isolated change regions with their byte spans.
    #[arg(long)]
    emit_regions: bool,
}

#[derive(Args)]
struct ProviderArgs {
    /// Precomputed embedding store; implies `--provider file_store`.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// mock, file_store or http_service.
    #[arg(long)]
    provider: Option<ProviderKind>,
    /// Comma-separated model ids.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Embedding service base URL (defaults to RRS_EMBED_URL).
    #[arg(long)]
    url: Option<String>,
}

impl ProviderArgs {
    fn config(&self) -> ProviderConfig {
        let kind = self.provider.unwrap_or(if self.embeddings.is_some() { ProviderKind::FileStore } else { ProviderKind::Mock });
        ProviderConfig {
            kind,
            model_ids: self.models.clone(),
            seed: self.seed,
            dim: self.dim,
            store: self.embeddings.clone(),
            url: self.url.clone(),
        }
    }
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Query a provider for every pair and write a store file.
    Precompute {
        corpus: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScoreArgs {
    corpus: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long, default_value = "0.5,0.3,0.2")]
    weights: WeightConfig,
    #[arg(long, default_value_t = 350)]
    max_nodes: usize,
    /// Writes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    corpus: PathBuf,
    #[command(flatten)]
    provider: ProviderArgs,
    /// `default` or `a,b,g;a,b,g;...`.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Weights used for the base scoring pass.
    #[arg(long, default_value = "0.5,0.3,0.2")]
    weights: WeightConfig,
    #[arg(long, default_value_t = 350)]
    max_nodes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    scores: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "I")]
    top_quadrant: Quadrant,
    #[arg(long, value_delimiter = ',', default_value = "cppcheck,clang-tidy,infer")]
    tools: Vec<Tool>,
    /// Per-tool, per-pair timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, default_value = "warning")]
    min_severity: Severity,
    /// JSON category mapping replacing the built-in one.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Where findings.jsonl and summary.json go.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Directory for `<which>.csv` plot series.
    #[arg(long)]
    plots: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    #[arg(long)]
    weights: Option<WeightConfig>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    weights: Option<WeightConfig>,
    /// Mock provider seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Turn the static-validation stage on.
    #[arg(long)]
    validate: bool,
    #[arg(long, value_delimiter = ',')]
    tools: Option<Vec<Tool>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = match cli.cmd {
        Cmd::Corpus { cmd } => corpus(cmd),
        Cmd::Ast { cmd: AstCmd::Dump { file, lang } } => ast_dump(&file, lang),
        Cmd::Diff(a) => diff(a),
        Cmd::Embed { cmd: EmbedCmd::Precompute { corpus, provider, out } } => precompute(&corpus, &provider, &out),
        Cmd::Score(a) => score(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Validate(a) => validate(a),
        Cmd::Report(a) => report(a),
        Cmd::Run(a) => run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rrs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(path: &Path) -> Result<Vec<rrs_core::FunctionPair>, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::config("corpus", format!("{} does not exist", path.display())));
    }
    load_corpus(path).map_err(|e| PipelineError::config("corpus", e.to_string()))
}

fn io_err<'a>(stage: &'static str, path: &'a Path) -> impl Fn(io::Error) -> PipelineError + 'a {
    move |e| PipelineError::stage(stage, format!("{}: {e}", path.display()))
}

/// Writes to `path`, or stdout when `None`.
fn emit(path: Option<&Path>, stage: &'static str, bytes: &[u8]) -> CmdResult {
    match path {
        Some(p) => fs::write(p, bytes).map_err(io_err(stage, p)),
        None => io::stdout().write_all(bytes).map_err(|e| PipelineError::stage(stage, e)),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn corpus(cmd: CorpusCmd) -> CmdResult {
    match cmd {
        CorpusCmd::Validate { path } => {
            let pairs = load(&path)?;
            println!("ok: {} pairs", pairs.len());
        }
        CorpusCmd::Stats { path } => emit(None, "corpus", &to_json(&corpus_stats(&load(&path)?)))?,
    }
    Ok(())
}

fn ast_dump(file: &Path, lang: Option<LanguageHint>) -> CmdResult {
    let src = fs::read_to_string(file).map_err(|e| PipelineError::config("file", format!("{}: {e}", file.display())))?;
    let lang = lang.unwrap_or(match file.extension().and_then(|e| e.to_str()) {
        Some("cc" | "cpp" | "cxx" | "hpp" | "hh") => LanguageHint::Cpp,
        _ => LanguageHint::C,
    });
    let tree = parse_function(&src, lang).map_err(|e| PipelineError::stage("parse", e))?;
    println!("{}", to_sexpr(&tree));
    Ok(())
}

fn diff(a: DiffArgs) -> CmdResult {
    let pairs = load(&a.corpus)?;
    let p = pairs
        .iter()
        .find(|p| p.pair_id == a.pair)
        .ok_or_else(|| PipelineError::config("pair", format!("{} not in corpus", a.pair)))?;
    let v = parse_function(&p.vuln_source, p.language_hint).map_err(|e| PipelineError::stage("parse", format!("vuln: {e}")))?;
    let b = parse_function(&p.benign_source, p.language_hint).map_err(|e| PipelineError::stage("parse", format!("benign: {e}")))?;
    let s = structural_scores(&v, &b, &EditCostModel::default()).map_err(|e| PipelineError::stage("diff", e))?;
    let mut out = match a.metric {
        Metric::All => serde_json::to_value(s).expect("serializable"),
        Metric::Nted => json!({ "ted_ops": s.ted_ops, "nted_similarity": s.nted_similarity }),
        Metric::Lts => json!({ "local_ted_ops": s.local_ted_ops, "lts_similarity": s.lts_similarity }),
        Metric::Jaccard => json!({ "jaccard": s.jaccard }),
        Metric::Align => json!({ "align_sim": s.align_sim }),
    };
    out["pair_id"] = json!(p.pair_id);
    out["vuln_nodes"] = json!(v.node_count());
    out["benign_nodes"] = json!(b.node_count());
    if a.emit_regions {
        let span = |t: &rrs_core::SyntaxTree, src: &str, root: Option<usize>| {
            root.map(|r| {
                let (lo, hi) = t.node(r).span;
                json!({ "node": r, "kind": t.node(r).kind, "span": [lo, hi], "text": &src[lo..hi] })
            })
        };
        let regions: Vec<_> = isolate_change_regions(&v, &b)
            .iter()
            .map(|r| {
                json!({
                    "vuln": span(&v, &p.vuln_source, r.vuln_subtree_root),
                    "benign": span(&b, &p.benign_source, r.benign_subtree_root),
                    "vuln_size": r.vuln_size,
                    "benign_size": r.benign_size,
                })
            })
            .collect();
        out["regions"] = json!(regions);
    }
    emit(None, "diff", &to_json(&out))
}

fn precompute(corpus: &Path, provider: &ProviderArgs, out: &Path) -> CmdResult {
    let pairs = load(corpus)?;
    let cfg = provider.config();
    if cfg.kind == ProviderKind::FileStore {
        return Err(PipelineError::config("provider", "precompute needs mock or http_service"));
    }
    let p = build_provider(&cfg)?;
    let records = precompute_store(p.as_ref(), &pairs).map_err(|e| PipelineError::stage("embed", e))?;
    write_store(out, &records).map_err(|e| PipelineError::stage("embed", e))?;
    log::info!("wrote {} vectors to {}", records.len(), out.display());
    Ok(())
}

fn filter(max_nodes: usize) -> Result<CorpusFilterConfig, PipelineError> {
    let f = CorpusFilterConfig { max_ast_nodes: max_nodes, ..Default::default() };
    f.validate().map_err(|e| PipelineError::config("max-nodes", e.to_string()))?;
    Ok(f)
}

fn score(a: ScoreArgs) -> CmdResult {
    a.weights.validate().map_err(|e| PipelineError::config("weights", e.to_string()))?;
    let pairs = load(&a.corpus)?;
    let provider = build_provider(&a.provider.config())?;
    let batch = score_pairs(&pairs, &filter(a.max_nodes)?, provider.as_ref(), &a.weights)?;
    for (id, why) in &batch.dropped {
        log::warn!("dropped {id}: {why}");
    }
    let mut buf = Vec::new();
    write_scores(&mut buf, &batch.scores).map_err(|e| PipelineError::stage("score", e))?;
    emit(a.out.as_deref(), "score", &buf)
}

fn parse_grid(s: &str) -> Result<Vec<WeightConfig>, PipelineError> {
    if s == "default" {
        return Ok(default_grid());
    }
    s.split(';').map(|w| w.trim().parse::<WeightConfig>().map_err(|e| PipelineError::config("grid", e))).collect()
}

fn sweep(a: SweepArgs) -> CmdResult {
    let grid = parse_grid(&a.grid)?;
    a.weights.validate().map_err(|e| PipelineError::config("weights", e.to_string()))?;
    let pairs = load(&a.corpus)?;
    let provider = build_provider(&a.provider.config())?;
    let batch = score_pairs(&pairs, &filter(a.max_nodes)?, provider.as_ref(), &a.weights)?;
    let result = sensitivity_sweep(&batch.scores, &grid).map_err(|e| PipelineError::stage("sweep", e))?;
    emit(a.out.as_deref(), "sweep", &to_json(&result))
}

fn read_score_file(path: &Path) -> Result<Vec<rrs_core::scoring::PairScore>, PipelineError> {
    let f = fs::File::open(path).map_err(|e| PipelineError::config("scores", format!("{}: {e}", path.display())))?;
    read_scores(f).map_err(|e| PipelineError::config("scores", format!("{}: {e}", path.display())))
}

fn validate(a: ValidateArgs) -> CmdResult {
    let cfg = ValidateConfig {
        enabled: true,
        tools: a.tools,
        timeout_secs: a.timeout,
        quadrant: a.top_quadrant,
        top_k: a.top_k,
        min_severity: a.min_severity,
        taxonomy: a.taxonomy,
    };
    if cfg.tools.is_empty() || cfg.timeout_secs == 0 || cfg.top_k == 0 {
        return Err(PipelineError::config("validate", "tools, timeout and top-k must be non-empty and positive"));
    }
    let taxonomy = match &cfg.taxonomy {
        Some(p) => Taxonomy::from_file(p).map_err(|e| PipelineError::config("taxonomy", e.to_string()))?,
        None => Taxonomy::default(),
    };
    let scores = read_score_file(&a.scores)?;
    let pairs = load(&a.corpus)?;
    let v = run_validation(&scores, &pairs, &cfg, &taxonomy)?;
    fs::create_dir_all(&a.out_dir).map_err(io_err("validate", &a.out_dir))?;
    let findings = a.out_dir.join("findings.jsonl");
    let f = fs::File::create(&findings).map_err(io_err("validate", &findings))?;
    write_findings(io::BufWriter::new(f), &v.results).map_err(io_err("validate", &findings))?;
    match &v.summary {
        Some(s) => {
            let path = a.out_dir.join("summary.json");
            fs::write(&path, to_json(s)).map_err(io_err("validate", &path))?;
            eprintln!(
                "{} selected, {} analyzed: any {:.1}%, two {:.1}%, all {:.1}%",
                v.selected, s.n_analyzed, s.pct_flagged_any, s.pct_flagged_two, s.pct_flagged_all
            );
        }
        None => eprintln!("{} selected, nothing analyzed", v.selected),
    }
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    if let Some(w) = &a.weights {
        w.validate().map_err(|e| PipelineError::config("weights", e.to_string()))?;
    }
    let scores = read_score_file(&a.scores)?;
    let ctx = SummaryContext { weights: a.weights, validation: None };
    let md = render_markdown(&scores, a.top_k, &ctx).map_err(|e| PipelineError::stage("report", e))?;
    fs::write(&a.out, md).map_err(io_err("report", &a.out))?;
    if let Some(dir) = &a.plots {
        fs::create_dir_all(dir).map_err(io_err("report", dir))?;
        for which in PlotWhich::ALL {
            let series = emit_plot_data(&scores, which).map_err(|e| PipelineError::stage("report", e))?;
            let path = dir.join(format!("{}.csv", which.name()));
            let f = fs::File::create(&path).map_err(io_err("report", &path))?;
            write_plot_csv(f, &series).map_err(|e| PipelineError::stage("report", e))?;
        }
    }
    Ok(())
}

fn run(a: RunArgs) -> CmdResult {
    let mut cfg = RunConfig::from_file(&a.config)?;
    if let Some(d) = a.out_dir {
        cfg.output_dir = d;
    }
    if let Some(w) = a.weights {
        cfg.weights = w;
    }
    if let Some(s) = a.seed {
        cfg.provider.seed = s;
    }
    if let Some(k) = a.top_k {
        cfg.report.top_k = k;
    }
    if a.validate {
        cfg.validate.enabled = true;
    }
    if let Some(t) = a.tools {
        cfg.validate.tools = t;
    }
    let outcome = run_pipeline(&cfg)?;
    let c = &outcome.manifest.counts;
    eprintln!(
        "scored {} of {} pairs ({} dropped); quadrants I-IV {:?}; output in {}",
        c.scored,
        c.loaded,
        c.dropped_size + c.dropped_parse,
        c.quadrants,
        cfg.output_dir.display()
    );
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
