use serde::Serialize;

use super::{PairScore, ScoringError, WeightConfig};

/// The five (alpha, beta) settings with gamma fixed at 0.2.
pub fn default_grid() -> Vec<WeightConfig> {
    [(0.5, 0.3), (0.3, 0.5), (0.4, 0.4), (0.6, 0.2), (0.2, 0.6)]
        .into_iter()
        .map(|(a, b)| WeightConfig { alpha: a, beta: b, gamma: 0.2 })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub configs: Vec<WeightConfig>,
    pub pair_ids: Vec<String>,
    /// `rrs[c][p]`: score of pair `p` under config `c`.
    pub rrs: Vec<Vec<f64>>,
    /// `ranks[c][p]`: 1-based position of pair `p` under config `c`,
    /// highest score first, ties by pair id.
    pub ranks: Vec<Vec<usize>>,
    /// Spearman correlation between every pair of configs.
    pub spearman: Vec<Vec<f64>>,
}

/// Re-scores already computed signals under each weight config.
pub fn sensitivity_sweep(scores: &[PairScore], grid: &[WeightConfig]) -> Result<SweepResult, ScoringError> {
    for w in grid {
        w.validate()?;
    }
    let rrs: Vec<Vec<f64>> = grid
        .iter()
        .map(|w| scores.iter().map(|s| w.alpha * s.mean_sem + w.beta * s.struct_sim + w.gamma * s.agree).collect())
        .collect();
    let ranks = rrs.iter().map(|col| ordinal_ranks(col, scores)).collect();
    let spearman = rrs.iter().map(|a| rrs.iter().map(|b| spearman(a, b)).collect()).collect();
    Ok(SweepResult {
        configs: grid.to_vec(),
        pair_ids: scores.iter().map(|s| s.pair_id.clone()).collect(),
        rrs,
        ranks,
        spearman,
    })
}

/// Values closer than this are treated as tied when ranking, so that
/// summation-order rounding cannot reorder equal scores.
const TIE_TOL: f64 = 1e-12;

fn ordinal_ranks(values: &[f64], scores: &[PairScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        if (values[i] - values[j]).abs() <= TIE_TOL {
            scores[i].pair_id.cmp(&scores[j].pair_id)
        } else {
            values[j].total_cmp(&values[i])
        }
    });
    let mut ranks = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Ascending ranks, tied groups sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - values[order[end - 1]] <= TIE_TOL {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
///
/// Identical rank vectors give exactly 1.0 (including n < 2). If exactly one
/// side is constant the correlation is undefined and reported as 0.0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman needs equal-length inputs");
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    if ra == rb {
        return 1.0;
    }
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Quadrant;

    fn score(id: &str, e: f64, a: f64, g: f64) -> PairScore {
        PairScore {
            pair_id: id.into(),
            per_model: vec![],
            mean_sem: e,
            struct_sim: a,
            cross_var: 0.0,
            agree: g,
            rrs: 0.0,
            quadrant: Quadrant::I,
        }
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[0.4], &[0.9]), 1.0);
        assert_eq!(spearman(&[], &[]), 1.0);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn spearman_with_ties_matches_textbook() {
        // ranks a: 1, 2.5, 2.5, 4; b: 1, 2, 3, 4
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]);
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((r - expected).abs() < 1e-12, "{r}");
    }

    #[test]
    fn three_pair_fixture_matches_direct_formula() {
        let scores = vec![score("a", 0.99, 0.60, 1.0), score("b", 0.90, 0.95, 0.5), score("c", 0.95, 0.80, 0.0)];
        let out = sensitivity_sweep(&scores, &default_grid()).unwrap();
        for (c, w) in default_grid().iter().enumerate() {
            for (p, s) in scores.iter().enumerate() {
                let direct = w.alpha * s.mean_sem + w.beta * s.struct_sim + w.gamma * s.agree;
                assert_eq!(out.rrs[c][p], direct);
            }
        }
        // (0.5, 0.3): a 0.875, b 0.835, c 0.715
        assert_eq!(out.ranks[0], vec![1, 2, 3]);
        // (0.2, 0.6): a 0.758, b 0.85, c 0.67
        assert_eq!(out.ranks[4], vec![2, 1, 3]);
        assert!((out.spearman[0][4] - 0.5).abs() < 1e-12);
        for c in 0..5 {
            assert_eq!(out.spearman[c][c], 1.0);
        }
    }

    #[test]
    fn invalid_grid_rejected() {
        let bad = [WeightConfig { alpha: 0.9, beta: 0.9, gamma: 0.2 }];
        assert!(sensitivity_sweep(&[], &bad).is_err());
    }
}
