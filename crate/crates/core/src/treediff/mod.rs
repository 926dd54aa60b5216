//! Tree edit distance and the structural similarity metrics built on it.
//!
//! All similarities share the denominator `max(|t1|, |t2|)` except Jaccard,
//! which is a multiset ratio. Values below zero (possible when renames push
//! the distance past the larger tree size) clamp to 0.

mod regions;
mod zhang_shasha;

use serde::Serialize;

use crate::astkit::{node_multiset, SyntaxTree};

pub use regions::{isolate_change_regions, match_trees, ChangeRegion, Matching};
pub use zhang_shasha::DEFAULT_CELL_BUDGET;

/// Unit-cost edit model: insertions and deletions cost their fixed amount,
/// renames cost `rename_cost` only when labels differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EditCostModel {
    pub insert_cost: f64,
    pub delete_cost: f64,
    pub rename_cost: f64,
    /// Upper bound on `|t1| * |t2|` accepted by the quadratic routines.
    pub cell_budget: usize,
}

impl Default for EditCostModel {
    fn default() -> Self {
        EditCostModel {
            insert_cost: 1.0,
            delete_cost: 1.0,
            rename_cost: 1.0,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

impl EditCostModel {
    pub fn with_budget(mut self, cells: usize) -> Self {
        self.cell_budget = cells;
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeDiffError {
    #[error("tree pair needs {cells} DP cells, budget is {budget}")]
    Budget { cells: usize, budget: usize },
    #[error("invalid cost model: {0}")]
    Costs(String),
}

fn check_costs(cost: &EditCostModel) -> Result<(), TreeDiffError> {
    let ok = |c: f64| c.is_finite() && c >= 0.0;
    if ok(cost.insert_cost) && ok(cost.delete_cost) && ok(cost.rename_cost) {
        Ok(())
    } else {
        Err(TreeDiffError::Costs(format!("{cost:?}")))
    }
}

/// Ordered-tree edit distance (Zhang–Shasha).
pub fn ted(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    check_costs(cost)?;
    zhang_shasha::zhang_shasha(t1, t2, cost, cost.cell_budget)
}

fn similarity(distance: f64, t1: &SyntaxTree, t2: &SyntaxTree) -> f64 {
    let denom = t1.node_count().max(t2.node_count()) as f64;
    (1.0 - distance / denom).clamp(0.0, 1.0)
}

/// `1 - ted / max(|t1|, |t2|)`, the global normalized similarity.
pub fn nted_similarity(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    Ok(similarity(ted(t1, t2, cost)?, t1, t2))
}

/// Edit cost restricted to the isolated change regions.
///
/// Each region pair contributes the distance between its two subtrees; a
/// region paired with the empty tree contributes its full insertion or
/// deletion cost. The result never exceeds the global distance: when the
/// region decomposition is costlier than the unrestricted script (possible
/// when exact-subtree matching pairs a node far from its best partner), the
/// global script is itself the cheaper localized account of the change.
pub fn local_ted(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    let global = ted(t1, t2, cost)?;
    let region_cost = region_ted(t1, t2, cost)?;
    Ok(region_cost.min(global))
}

/// Sum of per-region distances, without the global cap.
pub fn region_ted(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    check_costs(cost)?;
    let mut total = 0.0;
    for region in isolate_change_regions(t1, t2) {
        total += match (region.vuln_subtree_root, region.benign_subtree_root) {
            (Some(x), Some(y)) => ted(&t1.subtree(x), &t2.subtree(y), cost)?,
            (Some(_), None) => region.vuln_size as f64 * cost.delete_cost,
            (None, Some(_)) => region.benign_size as f64 * cost.insert_cost,
            (None, None) => 0.0,
        };
    }
    Ok(total)
}

/// Localized TED similarity: `1 - local_ted / max(|t1|, |t2|)`.
pub fn lts_similarity(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    Ok(similarity(local_ted(t1, t2, cost)?, t1, t2))
}

/// Multiset Jaccard over node labels.
pub fn jaccard_similarity(t1: &SyntaxTree, t2: &SyntaxTree) -> f64 {
    let a = node_multiset(t1);
    let b = node_multiset(t2);
    let union = a.union_size(&b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_size(&b) as f64 / union as f64
}

/// Longest common subsequence of the pre-order label sequences over the
/// larger tree size.
pub fn alignment_similarity(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<f64, TreeDiffError> {
    let (n, m) = (t1.node_count(), t2.node_count());
    let cells = n.saturating_mul(m);
    if cells > cost.cell_budget {
        return Err(TreeDiffError::Budget { cells, budget: cost.cell_budget });
    }
    let a: Vec<_> = t1.preorder().into_iter().map(|id| t1.label(id)).collect();
    let b: Vec<_> = t2.preorder().into_iter().map(|id| t2.label(id)).collect();
    let matches = lcs_len(&a, &b);
    Ok((matches as f64 / n.max(m) as f64).clamp(0.0, 1.0))
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralScores {
    pub ted_ops: f64,
    pub local_ted_ops: f64,
    pub nted_similarity: f64,
    pub lts_similarity: f64,
    pub jaccard: f64,
    pub align_sim: f64,
}

/// All structural metrics for one pair, sharing a single global TED run.
pub fn structural_scores(t1: &SyntaxTree, t2: &SyntaxTree, cost: &EditCostModel) -> Result<StructuralScores, TreeDiffError> {
    let global = ted(t1, t2, cost)?;
    let local = region_ted(t1, t2, cost)?.min(global);
    Ok(StructuralScores {
        ted_ops: global,
        local_ted_ops: local,
        nted_similarity: similarity(global, t1, t2),
        lts_similarity: similarity(local, t1, t2),
        jaccard: jaccard_similarity(t1, t2),
        align_sim: alignment_similarity(t1, t2, cost)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astkit::from_sexpr;

    fn t(s: &str) -> SyntaxTree {
        from_sexpr(s).unwrap()
    }

    #[test]
    fn identical_trees() {
        let a = t("(A (B (C)) (D))");
        let c = EditCostModel::default();
        assert_eq!(ted(&a, &a, &c).unwrap(), 0.0);
        assert_eq!(nted_similarity(&a, &a, &c).unwrap(), 1.0);
        assert_eq!(lts_similarity(&a, &a, &c).unwrap(), 1.0);
        assert_eq!(jaccard_similarity(&a, &a), 1.0);
        assert_eq!(alignment_similarity(&a, &a, &c).unwrap(), 1.0);
        assert!(isolate_change_regions(&a, &a).is_empty());
    }

    #[test]
    fn single_rename() {
        let (a, b) = (t("(A)"), t("(B)"));
        let c = EditCostModel::default();
        assert_eq!(ted(&a, &b, &c).unwrap(), 1.0);
        assert_eq!(nted_similarity(&a, &b, &c).unwrap(), 0.0);
    }

    #[test]
    fn zhang_shasha_reference_example() {
        let a = t("(f (d (a) (c (b))) (e))");
        let b = t("(f (c (d (a) (b))) (e))");
        assert_eq!(ted(&a, &b, &EditCostModel::default()).unwrap(), 2.0);
    }

    #[test]
    fn budget_guard() {
        let a = t("(A (B) (C))");
        let c = EditCostModel::default().with_budget(8);
        assert!(matches!(ted(&a, &a, &c), Err(TreeDiffError::Budget { cells: 9, budget: 8 })));
        assert!(alignment_similarity(&a, &a, &c).is_err());
    }

    #[test]
    fn negative_costs_rejected() {
        let a = t("(A)");
        let c = EditCostModel { insert_cost: -1.0, ..Default::default() };
        assert!(matches!(ted(&a, &a, &c), Err(TreeDiffError::Costs(_))));
    }

    #[test]
    fn disjoint_labels_jaccard_zero() {
        assert_eq!(jaccard_similarity(&t("(A (B))"), &t("(C (D))")), 0.0);
    }

    #[test]
    fn jaccard_multiset_example() {
        // {A,A,B} vs {A,B,C}
        let a = t("(A (A) (B))");
        let b = t("(A (B) (C))");
        assert_eq!(jaccard_similarity(&a, &b), 0.5);
    }

    #[test]
    fn alignment_example() {
        // pre-order ABAB vs ABB: LCS 3 over max size 4
        let a = t("(A (B) (A) (B))");
        let b = t("(A (B) (B))");
        assert_eq!(alignment_similarity(&a, &b, &EditCostModel::default()).unwrap(), 0.75);
        assert_eq!(alignment_similarity(&t("(A)"), &t("(B)"), &EditCostModel::default()).unwrap(), 0.0);
    }

    #[test]
    fn one_leaf_difference_gives_one_region() {
        let a = t(r#"(R (S (x "1") (y "2")) (S (x "3") (y "4")))"#);
        let b = t(r#"(R (S (x "1") (y "2")) (S (x "3") (y "5")))"#);
        let regions = isolate_change_regions(&a, &b);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        let (x, y) = (r.vuln_subtree_root.unwrap(), r.benign_subtree_root.unwrap());
        assert_eq!(a.node(x).text, "4");
        assert_eq!(b.node(y).text, "5");
    }

    #[test]
    fn extra_leaf_costs_one_insert() {
        let a = t("(A (B) (C))");
        let b = t("(A (B) (X) (C))");
        let c = EditCostModel::default();
        assert_eq!(local_ted(&a, &b, &c).unwrap(), 1.0);
        assert!((lts_similarity(&a, &b, &c).unwrap() - (1.0 - 1.0 / 4.0)).abs() < 1e-12);
        let regions = isolate_change_regions(&a, &b);
        assert_eq!(regions, vec![ChangeRegion { vuln_subtree_root: None, benign_subtree_root: Some(2), vuln_size: 0, benign_size: 1 }]);
    }

    #[test]
    fn moved_block_is_cheap_locally() {
        // swapping two bulky siblings: TED pays to rebuild one of them, the
        // exact-subtree matcher sees two moves and no edits
        let a = t("(R (P (a) (b) (c) (d)) (Q (e) (f) (g) (h)))");
        let b = t("(R (Q (e) (f) (g) (h)) (P (a) (b) (c) (d)))");
        let c = EditCostModel::default();
        assert!(ted(&a, &b, &c).unwrap() >= 5.0);
        assert_eq!(local_ted(&a, &b, &c).unwrap(), 0.0);
    }
}
