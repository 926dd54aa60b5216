//! Residual Risk Score: semantic, structural and cross-model agreement
//! signals folded into one number per pair, plus median-split quadrants.
//!
//! Scoring is two-pass. Per-pair signals are independent and can be
//! computed in parallel; agreement and quadrants depend on batch-wide
//! statistics (largest cross-model deviation, medians) and are finalized
//! once every pair's signals are known.

mod sweep;
mod table;

use serde::{Deserialize, Serialize};

use crate::embedkit::ModelSimilarity;

pub use sweep::{default_grid, sensitivity_sweep, spearman, SweepResult};
pub use table::{read_scores, write_scores, ScoreTableError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("weights must lie in [0, 1] and sum to 1, got ({alpha}, {beta}, {gamma})")]
    Weights { alpha: f64, beta: f64, gamma: f64 },
    #[error("no per-model similarities")]
    NoModels,
    #[error("pair {pair_id:?} has {got} model similarities, batch has {expected}")]
    ModelCount { pair_id: String, expected: usize, got: usize },
    #[error("signal {name} = {value} is outside [0, 1]")]
    Signal { name: &'static str, value: f64 },
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Weights on semantic similarity, structural similarity and agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { alpha: 0.5, beta: 0.3, gamma: 0.2 }
    }
}

impl WeightConfig {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ScoringError> {
        let w = WeightConfig { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let sum = self.alpha + self.beta + self.gamma;
        if unit(self.alpha) && unit(self.beta) && unit(self.gamma) && (sum - 1.0).abs() <= WEIGHT_SUM_TOL {
            Ok(())
        } else {
            Err(ScoringError::Weights { alpha: self.alpha, beta: self.beta, gamma: self.gamma })
        }
    }
}

impl std::fmt::Display for WeightConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.alpha, self.beta, self.gamma)
    }
}

impl std::str::FromStr for WeightConfig {
    type Err = String;

    /// Parses `alpha,beta,gamma`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [a, b, g] => WeightConfig::new(a, b, g).map_err(|e| e.to_string()),
            _ => Err(format!("expected three comma-separated weights, got {}", parts.len())),
        }
    }
}

/// Arithmetic mean of the per-model cosines.
pub fn mean_semantic(per_model: &[f64]) -> Result<f64, ScoringError> {
    if per_model.is_empty() {
        return Err(ScoringError::NoModels);
    }
    Ok(per_model.iter().sum::<f64>() / per_model.len() as f64)
}

/// Population variance (divisor M), two-pass. Lists of identical values
/// give exactly 0 rather than the rounding residue of their mean.
pub fn cross_variance(per_model: &[f64]) -> Result<f64, ScoringError> {
    let mean = mean_semantic(per_model)?;
    if per_model.iter().all(|&x| x == per_model[0]) {
        return Ok(0.0);
    }
    Ok(per_model.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / per_model.len() as f64)
}

/// Batch-wide statistics needed to finalize per-pair scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchContext {
    /// Largest cross-model standard deviation in the batch.
    pub sigma_max: f64,
    /// Set when every pair has zero spread, so `sigma_max` is 0.
    pub degenerate: bool,
    pub median_e: f64,
    pub median_a: f64,
}

/// Median; for an even count, the midpoint of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

impl BatchContext {
    pub fn from_signals(signals: &[PairSignals]) -> Self {
        let sigma_max = signals.iter().map(|s| s.cross_var.sqrt()).fold(0.0, f64::max);
        let e: Vec<f64> = signals.iter().map(|s| s.mean_sem).collect();
        let a: Vec<f64> = signals.iter().map(|s| s.struct_sim).collect();
        BatchContext {
            sigma_max,
            degenerate: sigma_max == 0.0,
            median_e: median(&e).unwrap_or(0.0),
            median_a: median(&a).unwrap_or(0.0),
        }
    }
}

/// Variance and agreement `1 - sd / sigma_max`, clamped to [0, 1]. A
/// degenerate batch gives every pair full agreement.
pub fn cross_agreement(per_model: &[f64], ctx: &BatchContext) -> Result<(f64, f64), ScoringError> {
    let var = cross_variance(per_model)?;
    Ok((var, agreement(var, ctx)))
}

fn agreement(var: f64, ctx: &BatchContext) -> f64 {
    if ctx.degenerate || ctx.sigma_max <= 0.0 {
        return 1.0;
    }
    (1.0 - var.sqrt() / ctx.sigma_max).clamp(0.0, 1.0)
}

/// `alpha * mean_sem + beta * struct_sim + gamma * agree`.
pub fn rrs(mean_sem: f64, struct_sim: f64, agree: f64, w: &WeightConfig) -> Result<f64, ScoringError> {
    w.validate()?;
    for (name, value) in [("mean_sem", mean_sem), ("struct_sim", struct_sim), ("agree", agree)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ScoringError::Signal { name, value });
        }
    }
    Ok(w.alpha * mean_sem + w.beta * struct_sim + w.gamma * agree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV];

    pub fn from_axes(e_high: bool, a_high: bool) -> Self {
        match (e_high, a_high) {
            (true, true) => Quadrant::I,
            (true, false) => Quadrant::II,
            (false, true) => Quadrant::III,
            (false, false) => Quadrant::IV,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        }
    }

    /// Row description used in the summary table.
    pub fn description(&self) -> &'static str {
        match self {
            Quadrant::I => "High E, High A",
            Quadrant::II => "High E, Low A",
            Quadrant::III => "Low E, High A",
            Quadrant::IV => "Low E, Low A",
        }
    }

    pub fn interpretation(&self) -> &'static str {
        match self {
            Quadrant::I => "Minor change, likely residual risk",
            Quadrant::II => "Structural change, embeddings blind spot",
            Quadrant::III => "Cosmetic vs. lexical change",
            Quadrant::IV => "Major change, likely mitigated",
        }
    }
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Quadrant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Quadrant::ALL
            .into_iter()
            .find(|q| q.label() == s)
            .ok_or_else(|| format!("unknown quadrant {s:?}"))
    }
}

/// Pass-one output: everything that does not depend on the rest of the batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSignals {
    pub pair_id: String,
    pub per_model: Vec<ModelSimilarity>,
    pub mean_sem: f64,
    pub struct_sim: f64,
    pub cross_var: f64,
}

impl PairSignals {
    /// Negative mean cosines clamp to 0 so the signal stays in [0, 1].
    pub fn new(pair_id: String, per_model: Vec<ModelSimilarity>, struct_sim: f64) -> Result<Self, ScoringError> {
        let cos: Vec<f64> = per_model.iter().map(|m| m.cosine).collect();
        let mean_sem = mean_semantic(&cos)?.clamp(0.0, 1.0);
        let cross_var = cross_variance(&cos)?;
        if !(0.0..=1.0).contains(&struct_sim) {
            return Err(ScoringError::Signal { name: "struct_sim", value: struct_sim });
        }
        Ok(PairSignals { pair_id, per_model, mean_sem, struct_sim, cross_var })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub per_model: Vec<ModelSimilarity>,
    pub mean_sem: f64,
    pub struct_sim: f64,
    pub cross_var: f64,
    pub agree: f64,
    pub rrs: f64,
    pub quadrant: Quadrant,
}

/// Sets each score's quadrant from the batch medians (ties go High).
pub fn classify_quadrants(scores: &mut [PairScore], ctx: &BatchContext) {
    for s in scores {
        s.quadrant = Quadrant::from_axes(s.mean_sem >= ctx.median_e, s.struct_sim >= ctx.median_a);
    }
}

/// Pass two: batch context, then agreement, RRS and quadrant per pair.
/// Output order follows input order.
pub fn score_batch(signals: Vec<PairSignals>, w: &WeightConfig) -> Result<(Vec<PairScore>, BatchContext), ScoringError> {
    w.validate()?;
    if let Some(first) = signals.first() {
        let expected = first.per_model.len();
        if let Some(bad) = signals.iter().find(|s| s.per_model.len() != expected) {
            return Err(ScoringError::ModelCount {
                pair_id: bad.pair_id.clone(),
                expected,
                got: bad.per_model.len(),
            });
        }
    }
    let ctx = BatchContext::from_signals(&signals);
    let mut scores = signals
        .into_iter()
        .map(|s| {
            let agree = agreement(s.cross_var, &ctx);
            let score = rrs(s.mean_sem, s.struct_sim, agree, w)?;
            Ok(PairScore {
                pair_id: s.pair_id,
                per_model: s.per_model,
                mean_sem: s.mean_sem,
                struct_sim: s.struct_sim,
                cross_var: s.cross_var,
                agree,
                rrs: score,
                quadrant: Quadrant::IV,
            })
        })
        .collect::<Result<Vec<_>, ScoringError>>()?;
    classify_quadrants(&mut scores, &ctx);
    Ok((scores, ctx))
}
