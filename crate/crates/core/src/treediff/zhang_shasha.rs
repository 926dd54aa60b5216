use std::collections::HashMap;

use crate::astkit::{Label, SyntaxTree};

use super::{EditCostModel, TreeDiffError};

/// Default cap on `|t1| * |t2|`. Trees kept by the default corpus filter
/// (350 nodes) need at most 122,500 cells.
pub const DEFAULT_CELL_BUDGET: usize = 4_000_000;

/// Post-order view of a tree with interned labels.
struct PostOrder {
    labels: Vec<u32>,
    /// `lml[i]`: post-order index of the leftmost leaf descendant of `i`.
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

impl PostOrder {
    fn new(tree: &SyntaxTree, intern: &mut HashMap<Label, u32>) -> Self {
        let order = tree.postorder();
        let mut post_of = vec![0usize; tree.node_count()];
        for (k, &id) in order.iter().enumerate() {
            post_of[id] = k;
        }
        let mut labels = Vec::with_capacity(order.len());
        let mut lml = vec![0usize; order.len()];
        for (k, &id) in order.iter().enumerate() {
            let next = intern.len() as u32;
            labels.push(*intern.entry(tree.label(id)).or_insert(next));
            let node = tree.node(id);
            lml[k] = match node.children.first() {
                Some(&first) => lml[post_of[first]],
                None => k,
            };
        }
        // a keyroot is the highest node for each distinct leftmost leaf
        let mut highest: HashMap<usize, usize> = HashMap::new();
        for (k, &l) in lml.iter().enumerate() {
            highest.insert(l, k);
        }
        let mut keyroots: Vec<usize> = highest.into_values().collect();
        keyroots.sort_unstable();
        PostOrder { labels, lml, keyroots }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

pub(super) fn zhang_shasha(
    a: &SyntaxTree,
    b: &SyntaxTree,
    cost: &EditCostModel,
    budget: usize,
) -> Result<f64, TreeDiffError> {
    let cells = a.node_count().saturating_mul(b.node_count());
    if cells > budget {
        return Err(TreeDiffError::Budget { cells, budget });
    }
    let mut intern = HashMap::new();
    let ta = PostOrder::new(a, &mut intern);
    let tb = PostOrder::new(b, &mut intern);
    let (n, m) = (ta.len(), tb.len());

    let rename = |i: usize, j: usize| {
        if ta.labels[i] == tb.labels[j] {
            0.0
        } else {
            cost.rename_cost
        }
    };

    let mut treedist = vec![0.0f64; n * m];
    // forest distance scratch, indexed with a one-slot offset for the empty forest
    let mut fd = vec![0.0f64; (n + 1) * (m + 1)];
    let w = m + 1;

    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let li = ta.lml[i];
            let lj = tb.lml[j];
            // fd rows cover forests ta[li..=x], columns tb[lj..=y]; slot 0 is empty
            let rows = i - li + 2;
            let cols = j - lj + 2;
            fd[0] = 0.0;
            for x in 1..rows {
                fd[x * w] = fd[(x - 1) * w] + cost.delete_cost;
            }
            for y in 1..cols {
                fd[y] = fd[y - 1] + cost.insert_cost;
            }
            for x in 1..rows {
                let ni = li + x - 1;
                for y in 1..cols {
                    let nj = lj + y - 1;
                    let del = fd[(x - 1) * w + y] + cost.delete_cost;
                    let ins = fd[x * w + y - 1] + cost.insert_cost;
                    if ta.lml[ni] == li && tb.lml[nj] == lj {
                        let sub = fd[(x - 1) * w + y - 1] + rename(ni, nj);
                        let v = del.min(ins).min(sub);
                        fd[x * w + y] = v;
                        treedist[ni * m + nj] = v;
                    } else {
                        let px = ta.lml[ni] - li;
                        let py = tb.lml[nj] - lj;
                        let sub = fd[px * w + py] + treedist[ni * m + nj];
                        fd[x * w + y] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    Ok(treedist[(n - 1) * m + (m - 1)])
}
