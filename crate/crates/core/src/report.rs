//! Ranked tables, plot series and the Markdown run summary.
//!
//! Everything here is a pure function of finalized scores, and every output
//! is byte-stable for identical input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::scoring::{median, PairScore, Quadrant, WeightConfig};
use crate::staticval::ValidationSummary;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no scores to report")]
    Empty,
    #[error("top_k must be at least 1")]
    TopK,
    #[error("unknown plot series {0:?} (expected lts_hist, sem_struct_scatter, multisignal_bars or model_consistency)")]
    UnknownSeries(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// RRS bands from the quadrant summary table: >= 0.97, [0.94, 0.97),
/// [0.90, 0.94), < 0.90. Each band is named after the table row it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RiskBand {
    Top,
    High,
    Elevated,
    Low,
}

impl RiskBand {
    pub const ALL: [RiskBand; 4] = [RiskBand::Top, RiskBand::High, RiskBand::Elevated, RiskBand::Low];

    pub fn from_rrs(rrs: f64) -> Self {
        if rrs >= 0.97 {
            RiskBand::Top
        } else if rrs >= 0.94 {
            RiskBand::High
        } else if rrs >= 0.90 {
            RiskBand::Elevated
        } else {
            RiskBand::Low
        }
    }

    pub fn range(&self) -> &'static str {
        match self {
            RiskBand::Top => ">= 0.97",
            RiskBand::High => "0.94 <= RRS < 0.97",
            RiskBand::Elevated => "0.90 <= RRS < 0.94",
            RiskBand::Low => "< 0.90",
        }
    }

    /// Quadrant whose table row carries this band.
    pub fn row(&self) -> Quadrant {
        match self {
            RiskBand::Top => Quadrant::I,
            RiskBand::High => Quadrant::II,
            RiskBand::Elevated => Quadrant::III,
            RiskBand::Low => Quadrant::IV,
        }
    }
}

impl std::fmt::Display for RiskBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RiskBand::Top => "top",
            RiskBand::High => "high",
            RiskBand::Elevated => "elevated",
            RiskBand::Low => "low",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub pair_id: String,
    pub rrs: f64,
    pub band: RiskBand,
    pub quadrant: Quadrant,
    pub mean_sem: f64,
    pub struct_sim: f64,
    pub agree: f64,
    pub cross_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub total: usize,
    pub entries: Vec<RankedEntry>,
}

/// Scores ordered by RRS descending, ties by pair id ascending.
pub fn ranked(scores: &[PairScore]) -> Vec<&PairScore> {
    let mut order: Vec<&PairScore> = scores.iter().collect();
    order.sort_by(|a, b| b.rrs.total_cmp(&a.rrs).then_with(|| a.pair_id.cmp(&b.pair_id)));
    order
}

/// The `top_k` highest-risk pairs (all of them if the batch is smaller).
pub fn emit_rank_report(scores: &[PairScore], top_k: usize) -> Result<RankReport, ReportError> {
    if scores.is_empty() {
        return Err(ReportError::Empty);
    }
    if top_k == 0 {
        return Err(ReportError::TopK);
    }
    let entries = ranked(scores)
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, s)| RankedEntry {
            rank: i + 1,
            pair_id: s.pair_id.clone(),
            rrs: s.rrs,
            band: RiskBand::from_rrs(s.rrs),
            quadrant: s.quadrant,
            mean_sem: s.mean_sem,
            struct_sim: s.struct_sim,
            agree: s.agree,
            cross_var: s.cross_var,
        })
        .collect();
    Ok(RankReport { total: scores.len(), entries })
}

pub fn write_rank_csv<W: Write>(out: W, report: &RankReport) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "pair_id", "rrs", "band", "quadrant", "mean_sem", "struct_sim", "agree", "cross_var"])?;
    for e in &report.entries {
        w.write_record([
            e.rank.to_string(),
            e.pair_id.clone(),
            e.rrs.to_string(),
            e.band.to_string(),
            e.quadrant.to_string(),
            e.mean_sem.to_string(),
            e.struct_sim.to_string(),
            e.agree.to_string(),
            e.cross_var.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Histogram,
    Scatter,
    GroupedBars,
}

/// Which figure's data to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlotWhich {
    LtsHist,
    SemStructScatter,
    MultisignalBars,
    ModelConsistency,
}

impl PlotWhich {
    pub const ALL: [PlotWhich; 4] =
        [PlotWhich::LtsHist, PlotWhich::SemStructScatter, PlotWhich::MultisignalBars, PlotWhich::ModelConsistency];

    pub fn name(&self) -> &'static str {
        match self {
            PlotWhich::LtsHist => "lts_hist",
            PlotWhich::SemStructScatter => "sem_struct_scatter",
            PlotWhich::MultisignalBars => "multisignal_bars",
            PlotWhich::ModelConsistency => "model_consistency",
        }
    }
}

impl std::str::FromStr for PlotWhich {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        PlotWhich::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| ReportError::UnknownSeries(s.to_string()))
    }
}

/// Plot data. Shapes by kind:
/// - histogram: `x` bin left edges, `y` counts, same length;
/// - scatter: one `(x, y)` per pair, `labels` pair ids, `z` the colour
///   channel (RRS);
/// - grouped bars: one `x` slot per label, `y` row-major with
///   `groups.len()` values per slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub kind: PlotKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub labels: Vec<String>,
    pub groups: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl PlotSeries {
    /// Checks that `x`/`y` lengths fit the kind.
    pub fn is_consistent(&self) -> bool {
        match self.kind {
            PlotKind::Histogram => self.x.len() == self.y.len(),
            PlotKind::Scatter => {
                self.x.len() == self.y.len() && self.labels.len() == self.x.len() && (self.z.is_empty() || self.z.len() == self.x.len())
            }
            PlotKind::GroupedBars => self.labels.len() == self.x.len() && self.y.len() == self.x.len() * self.groups.len(),
        }
    }
}

pub const HIST_BINS: usize = 20;

/// Index of `v` among `HIST_BINS` equal bins over [0, 1]; 1.0 lands in the
/// last bin.
pub fn hist_bin(v: f64) -> usize {
    ((v.clamp(0.0, 1.0) * HIST_BINS as f64).floor() as usize).min(HIST_BINS - 1)
}

/// Mean, median, min and max of a non-empty list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub sd: f64,
}

pub fn stats(values: &[f64]) -> Option<Stats> {
    let med = median(values)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(Stats {
        mean,
        median: med,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sd: var.sqrt(),
    })
}

fn stat_metadata(meta: &mut BTreeMap<String, String>, prefix: &str, s: &Stats) {
    meta.insert(format!("{prefix}mean"), s.mean.to_string());
    meta.insert(format!("{prefix}median"), s.median.to_string());
    meta.insert(format!("{prefix}min"), s.min.to_string());
    meta.insert(format!("{prefix}max"), s.max.to_string());
}

pub fn emit_plot_data(scores: &[PairScore], which: PlotWhich) -> Result<PlotSeries, ReportError> {
    if scores.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut meta = BTreeMap::new();
    meta.insert("n".to_string(), scores.len().to_string());
    let mut series = PlotSeries {
        name: which.name().to_string(),
        kind: PlotKind::Scatter,
        x: vec![],
        y: vec![],
        z: vec![],
        labels: vec![],
        groups: vec![],
        metadata: BTreeMap::new(),
    };
    match which {
        PlotWhich::LtsHist => {
            let lts: Vec<f64> = scores.iter().map(|s| s.struct_sim).collect();
            let mut counts = vec![0.0; HIST_BINS];
            for &v in &lts {
                counts[hist_bin(v)] += 1.0;
            }
            series.kind = PlotKind::Histogram;
            series.x = (0..HIST_BINS).map(|i| i as f64 / HIST_BINS as f64).collect();
            series.y = counts;
            meta.insert("bin_width".into(), (1.0 / HIST_BINS as f64).to_string());
            stat_metadata(&mut meta, "", &stats(&lts).expect("non-empty"));
        }
        PlotWhich::SemStructScatter => {
            series.x = scores.iter().map(|s| s.mean_sem).collect();
            series.y = scores.iter().map(|s| s.struct_sim).collect();
            series.z = scores.iter().map(|s| s.rrs).collect();
            series.labels = scores.iter().map(|s| s.pair_id.clone()).collect();
            meta.insert("median_e".into(), median(&series.x).expect("non-empty").to_string());
            meta.insert("median_a".into(), median(&series.y).expect("non-empty").to_string());
        }
        PlotWhich::MultisignalBars => {
            series.kind = PlotKind::GroupedBars;
            series.groups = vec!["embedding".into(), "lts".into(), "agreement".into()];
            for (i, s) in scores.iter().enumerate() {
                series.x.push(i as f64);
                series.labels.push(s.pair_id.clone());
                series.y.extend([s.mean_sem, s.struct_sim, s.agree]);
            }
        }
        PlotWhich::ModelConsistency => {
            series.kind = PlotKind::GroupedBars;
            series.groups = ["mean", "median", "sd", "min", "max"].map(String::from).to_vec();
            let models: Vec<&str> = scores[0].per_model.iter().map(|m| m.model_id.as_str()).collect();
            for (i, m) in models.iter().enumerate() {
                let cos: Vec<f64> = scores
                    .iter()
                    .filter_map(|s| s.per_model.iter().find(|p| p.model_id == *m).map(|p| p.cosine))
                    .collect();
                let st = stats(&cos).unwrap_or(Stats { mean: 0.0, median: 0.0, min: 0.0, max: 0.0, sd: 0.0 });
                series.x.push(i as f64);
                series.labels.push(m.to_string());
                series.y.extend([st.mean, st.median, st.sd, st.min, st.max]);
            }
        }
    }
    series.metadata = meta;
    debug_assert!(series.is_consistent());
    Ok(series)
}

/// CSV form of a series; the header depends on the kind.
pub fn write_plot_csv<W: Write>(out: W, s: &PlotSeries) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    match s.kind {
        PlotKind::Histogram => {
            w.write_record(["bin_start", "bin_end", "count"])?;
            let width = 1.0 / s.x.len().max(1) as f64;
            for (x, y) in s.x.iter().zip(&s.y) {
                w.write_record([x.to_string(), (x + width).min(1.0).to_string(), y.to_string()])?;
            }
        }
        PlotKind::Scatter => {
            w.write_record(["pair_id", "x", "y", "rrs"])?;
            for i in 0..s.x.len() {
                let z = s.z.get(i).map_or(String::new(), f64::to_string);
                w.write_record([s.labels[i].clone(), s.x[i].to_string(), s.y[i].to_string(), z])?;
            }
        }
        PlotKind::GroupedBars => {
            let mut header = vec!["label".to_string()];
            header.extend(s.groups.iter().cloned());
            w.write_record(&header)?;
            let g = s.groups.len();
            for (i, label) in s.labels.iter().enumerate() {
                let mut row = vec![label.clone()];
                row.extend(s.y[i * g..(i + 1) * g].iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Counts per quadrant in I..IV order.
pub fn quadrant_counts(scores: &[PairScore]) -> [usize; 4] {
    let mut c = [0usize; 4];
    for s in scores {
        c[Quadrant::ALL.iter().position(|q| *q == s.quadrant).expect("known quadrant")] += 1;
    }
    c
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

/// Quadrant table: label, RRS range, count, share and interpretation per row.
pub fn quadrant_table(scores: &[PairScore]) -> String {
    let counts = quadrant_counts(scores);
    let mut md = String::from("| Quadrant | RRS | Pairs | (%) | Behavioral Interpretation |\n|---|---|---|---|---|\n");
    for (band, q) in RiskBand::ALL.iter().zip(Quadrant::ALL) {
        let i = Quadrant::ALL.iter().position(|x| *x == q).expect("known quadrant");
        let _ = writeln!(
            md,
            "| {} ({}) | {} | {} | {:.1}% | {} |",
            q.label(),
            q.description(),
            band.range(),
            counts[i],
            pct(counts[i], scores.len()),
            q.interpretation()
        );
    }
    md
}

/// Extra context for the Markdown summary.
#[derive(Debug, Clone, Default)]
pub struct SummaryContext<'a> {
    pub weights: Option<WeightConfig>,
    pub validation: Option<&'a ValidationSummary>,
}

pub fn render_markdown(scores: &[PairScore], top_k: usize, ctx: &SummaryContext<'_>) -> Result<String, ReportError> {
    let report = emit_rank_report(scores, top_k)?;
    let e: Vec<f64> = scores.iter().map(|s| s.mean_sem).collect();
    let a: Vec<f64> = scores.iter().map(|s| s.struct_sim).collect();
    let rrs: Vec<f64> = scores.iter().map(|s| s.rrs).collect();
    let (es, as_, rs) = (stats(&e).expect("non-empty"), stats(&a).expect("non-empty"), stats(&rrs).expect("non-empty"));

    let mut md = String::from("# Residual risk summary\n\n");
    let _ = writeln!(md, "Pairs scored: {}", scores.len());
    if let Some(w) = ctx.weights {
        let _ = writeln!(md, "\nWeights: alpha = {}, beta = {}, gamma = {}", w.alpha, w.beta, w.gamma);
    }
    let _ = writeln!(md, "\nMedian thresholds: E = {:.4}, A = {:.4}\n", es.median, as_.median);

    md.push_str("## Quadrants\n\n");
    md.push_str(&quadrant_table(scores));

    md.push_str("\n## Signals\n\n| Signal | Mean | Median | Min | Max |\n|---|---|---|---|---|\n");
    for (name, s) in [("Embedding similarity", es), ("LTS", as_), ("RRS", rs)] {
        let _ = writeln!(md, "| {name} | {:.2} | {:.2} | {:.4} | {:.4} |", s.mean, s.median, s.min, s.max);
    }

    md.push_str("\n## RRS bands\n\n| Band | Range | Pairs |\n|---|---|---|\n");
    for band in RiskBand::ALL {
        let n = scores.iter().filter(|s| RiskBand::from_rrs(s.rrs) == band).count();
        let _ = writeln!(md, "| {band} | {} | {n} |", band.range());
    }

    let _ = writeln!(md, "\n## Top {} of {}\n", report.entries.len(), report.total);
    md.push_str("| Rank | Pair | RRS | Band | Quadrant | E | A | Agree |\n|---|---|---|---|---|---|---|---|\n");
    for r in &report.entries {
        let _ = writeln!(
            md,
            "| {} | {} | {:.4} | {} | {} | {:.4} | {:.4} | {:.4} |",
            r.rank,
            r.pair_id.replace('|', "\\|"),
            r.rrs,
            r.band,
            r.quadrant,
            r.mean_sem,
            r.struct_sim,
            r.agree
        );
    }

    if let Some(v) = ctx.validation {
        md.push_str("\n## Static validation\n\n");
        let _ = writeln!(md, "Analyzed {} of {} selected pairs ({} excluded: no tool could run).\n", v.n_analyzed, v.n_selected, v.n_excluded);
        let _ = writeln!(md, "| Flagged by | Share |\n|---|---|");
        let _ = writeln!(md, "| at least one tool | {:.1}% |", v.pct_flagged_any);
        let _ = writeln!(md, "| at least two tools | {:.1}% |", v.pct_flagged_two);
        let _ = writeln!(md, "| every tool | {:.1}% |", v.pct_flagged_all);
        let _ = writeln!(md, "| none | {:.1}% |", v.pct_clean);
        if !v.per_category.is_empty() {
            md.push_str("\n| Category | Findings | Pairs |\n|---|---|---|\n");
            for (cat, c) in &v.per_category {
                let _ = writeln!(md, "| {cat} | {} | {} |", c.findings, c.pairs);
            }
        }
    }
    Ok(md)
}
