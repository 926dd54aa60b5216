//! Change-region isolation.
//!
//! Identical subtrees are matched first (largest first, ties by pre-order
//! position), then matched parents have their remaining children aligned by
//! label from the root down. Nodes left unmatched form connected regions;
//! each region is reported as the subtree rooted at its topmost node and
//! paired with the region that sits in the same slot under the matched
//! counterpart of its parent.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::astkit::{Label, SyntaxTree};

/// A pair of subtrees that together cover one localized change. `None` on
/// either side stands for the empty tree (a pure insertion or deletion).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangeRegion {
    pub vuln_subtree_root: Option<usize>,
    pub benign_subtree_root: Option<usize>,
    pub vuln_size: usize,
    pub benign_size: usize,
}

/// Node correspondence produced by the matcher.
#[derive(Debug, Clone)]
pub struct Matching {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
}

impl Matching {
    fn link(&mut self, a: usize, b: usize) {
        self.left[a] = Some(b);
        self.right[b] = Some(a);
    }
}

fn structural_hashes(tree: &SyntaxTree) -> Vec<u64> {
    let mut hashes = vec![0u64; tree.node_count()];
    for id in tree.postorder() {
        let mut h = DefaultHasher::new();
        tree.label(id).hash(&mut h);
        let node = tree.node(id);
        node.children.len().hash(&mut h);
        for &c in &node.children {
            hashes[c].hash(&mut h);
        }
        hashes[id] = h.finish();
    }
    hashes
}

fn isomorphic(a: &SyntaxTree, x: usize, b: &SyntaxTree, y: usize) -> bool {
    let n = a.subtree_size(x);
    if n != b.subtree_size(y) {
        return false;
    }
    (0..n).all(|k| {
        let (na, nb) = (a.node(x + k), b.node(y + k));
        na.kind == nb.kind
            && na.children.len() == nb.children.len()
            && (!na.is_leaf() || na.text == nb.text)
    })
}

const MIN_EXACT_MATCH: usize = 2;

/// Computes the node matching between two trees.
pub fn match_trees(a: &SyntaxTree, b: &SyntaxTree) -> Matching {
    let mut m = Matching { left: vec![None; a.node_count()], right: vec![None; b.node_count()] };
    let ha = structural_hashes(a);
    let hb = structural_hashes(b);

    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    for y in 0..b.node_count() {
        by_hash.entry(hb[y]).or_default().push(y);
    }

    // exact subtree matches, largest first, then by pre-order position;
    // single leaves are left to the recovery pass so they match in place
    let mut order: Vec<usize> =
        (0..a.node_count()).filter(|&x| a.subtree_size(x) >= MIN_EXACT_MATCH).collect();
    order.sort_by_key(|&x| (std::cmp::Reverse(a.subtree_size(x)), x));
    for x in order {
        if m.left[x].is_some() {
            continue;
        }
        let Some(cands) = by_hash.get(&ha[x]) else { continue };
        let size = a.subtree_size(x);
        let hit = cands.iter().copied().find(|&y| {
            m.right[y].is_none()
                && (y..y + size).all(|k| m.right[k].is_none())
                && (x..x + size).all(|k| m.left[k].is_none())
                && isomorphic(a, x, b, y)
        });
        if let Some(y) = hit {
            for k in 0..size {
                m.link(x + k, y + k);
            }
        }
    }

    // top-down recovery of the remaining spine
    let mut queue = Vec::new();
    if m.left[0].is_none() && m.right[0].is_none() && a.label(0) == b.label(0) {
        m.link(0, 0);
        queue.push((0usize, 0usize));
    }
    while let Some((x, y)) = queue.pop() {
        let left: Vec<usize> =
            a.node(x).children.iter().copied().filter(|&c| m.left[c].is_none()).collect();
        let right: Vec<usize> =
            b.node(y).children.iter().copied().filter(|&c| m.right[c].is_none()).collect();
        let la: Vec<Label> = left.iter().map(|&c| a.label(c)).collect();
        let lb: Vec<Label> = right.iter().map(|&c| b.label(c)).collect();
        let mut found = Vec::new();
        for (i, j) in lcs_pairs(&la, &lb) {
            let (cx, cy) = (left[i], right[j]);
            if ha[cx] == hb[cy] && isomorphic(a, cx, b, cy) {
                for k in 0..a.subtree_size(cx) {
                    m.link(cx + k, cy + k);
                }
            } else {
                m.link(cx, cy);
                found.push((cx, cy));
            }
        }
        // pushed in reverse so the stack pops them in pre-order
        queue.extend(found.into_iter().rev());
    }
    m
}

/// Index pairs of one longest common subsequence, leftmost-preferring.
pub(crate) fn lcs_pairs<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (n, k) = (a.len(), b.len());
    let mut dp = vec![0u32; (n + 1) * (k + 1)];
    let w = k + 1;
    for i in (0..n).rev() {
        for j in (0..k).rev() {
            dp[i * w + j] = if a[i] == b[j] {
                dp[(i + 1) * w + j + 1] + 1
            } else {
                dp[(i + 1) * w + j].max(dp[i * w + j + 1])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < k {
        if a[i] == b[j] {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if dp[(i + 1) * w + j] >= dp[i * w + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Roots of the unmatched regions of one tree, in pre-order.
fn region_roots(tree: &SyntaxTree, matched: &[Option<usize>]) -> Vec<usize> {
    (0..tree.node_count())
        .filter(|&id| {
            matched[id].is_none()
                && tree.node(id).parent.is_none_or(|p| matched[p].is_some())
        })
        .collect()
}

/// Isolates the localized change regions between `a` (vulnerable) and `b`
/// (benign). Identical trees yield no regions.
pub fn isolate_change_regions(a: &SyntaxTree, b: &SyntaxTree) -> Vec<ChangeRegion> {
    let m = match_trees(a, b);
    regions_from_matching(a, b, &m)
}

pub(crate) fn regions_from_matching(a: &SyntaxTree, b: &SyntaxTree, m: &Matching) -> Vec<ChangeRegion> {
    let ra = region_roots(a, &m.left);
    let rb = region_roots(b, &m.right);

    // a region's slot is its parent (named by the vulnerable-side id) plus
    // the number of siblings to its left that are matched under the
    // counterpart parent
    let slot = |tree: &SyntaxTree, matched: &[Option<usize>], other: &SyntaxTree, root: usize| {
        let p = tree.node(root).parent?;
        let q = matched[p]?;
        let anchors = tree
            .node(p)
            .children
            .iter()
            .take_while(|&&c| c != root)
            .filter(|&&c| matched[c].is_some_and(|d| other.node(d).parent == Some(q)))
            .count();
        Some((p, q, anchors))
    };

    let mut slots: Vec<((usize, usize), Vec<usize>, Vec<usize>)> = Vec::new();
    let mut slot_entry = |key: (usize, usize)| -> usize {
        match slots.iter().position(|(k, _, _)| *k == key) {
            Some(i) => i,
            None => {
                slots.push((key, Vec::new(), Vec::new()));
                slots.len() - 1
            }
        }
    };
    let mut keyed_a = Vec::new();
    for &r in &ra {
        let key = slot(a, &m.left, b, r).map_or((usize::MAX, 0), |(p, _, n)| (p, n));
        keyed_a.push((slot_entry(key), r));
    }
    let mut keyed_b = Vec::new();
    for &r in &rb {
        let key = slot(b, &m.right, a, r).map_or((usize::MAX, 0), |(_, p, n)| (p, n));
        keyed_b.push((slot_entry(key), r));
    }
    for (i, r) in keyed_a {
        slots[i].1.push(r);
    }
    for (i, r) in keyed_b {
        slots[i].2.push(r);
    }

    let mut out = Vec::new();
    for (_, left, right) in slots {
        let n = left.len().max(right.len());
        for k in 0..n {
            let l = left.get(k).copied();
            let r = right.get(k).copied();
            out.push(region(a, b, l, r));
        }
    }
    out.sort_by_key(|r| {
        (r.vuln_subtree_root.unwrap_or(usize::MAX), r.benign_subtree_root.unwrap_or(usize::MAX))
    });
    out
}

fn region(a: &SyntaxTree, b: &SyntaxTree, l: Option<usize>, r: Option<usize>) -> ChangeRegion {
    ChangeRegion {
        vuln_subtree_root: l,
        benign_subtree_root: r,
        vuln_size: l.map_or(0, |x| a.subtree_size(x)),
        benign_size: r.map_or(0, |y| b.subtree_size(y)),
    }
}
