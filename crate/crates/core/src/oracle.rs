//! Brute-force reference computations for tiny inputs.
//!
//! Only compiled for tests or with the `oracles` feature. Nothing here shares
//! code with the production algorithms it is used to check.

use rand::Rng;

use crate::astkit::{Label, SyntaxNode, SyntaxTree};

/// Uniformly shaped random ordered tree with `n` nodes and labels drawn from
/// `alphabet`. Each new node attaches somewhere on the current rightmost
/// path, which keeps ids in pre-order.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, alphabet: &[&str]) -> SyntaxTree {
    assert!(n >= 1);
    let mut nodes: Vec<SyntaxNode> = Vec::with_capacity(n);
    let mut path: Vec<usize> = Vec::new();
    for id in 0..n {
        let kind = alphabet[rng.random_range(0..alphabet.len())].to_string();
        if id > 0 {
            let depth = rng.random_range(0..path.len());
            path.truncate(depth + 1);
            let parent = path[depth];
            nodes[parent].children.push(id);
        }
        nodes.push(SyntaxNode {
            kind,
            text: String::new(),
            children: Vec::new(),
            parent: None,
            span: (0, 0),
            is_error: false,
        });
        path.push(id);
    }
    SyntaxTree::from_nodes(nodes).expect("generator emits pre-order trees")
}

/// Exhaustive ordered-tree edit distance under unit costs.
///
/// Enumerates every mapping between the node sets that preserves
/// one-to-one correspondence, ancestry and left-to-right order, and returns
/// the cheapest `renames + unmapped_left + unmapped_right`. Exponential; keep
/// trees at roughly ten nodes or fewer.
pub fn brute_force_ted(a: &SyntaxTree, b: &SyntaxTree) -> u64 {
    let na = a.node_count();
    let nb = b.node_count();
    let la: Vec<Label> = (0..na).map(|i| a.label(i)).collect();
    let lb: Vec<Label> = (0..nb).map(|i| b.label(i)).collect();
    let anc_a = ancestry(a);
    let anc_b = ancestry(b);
    let order_a = positions(&a.preorder());
    let order_b = positions(&b.preorder());

    let mut best = (na + nb) as u64;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    search(0, &mut pairs, 0, &Ctx {
        na,
        nb,
        la: &la,
        lb: &lb,
        anc_a: &anc_a,
        anc_b: &anc_b,
        order_a: &order_a,
        order_b: &order_b,
    }, &mut best);
    best
}

struct Ctx<'a> {
    na: usize,
    nb: usize,
    la: &'a [Label],
    lb: &'a [Label],
    anc_a: &'a [Vec<bool>],
    anc_b: &'a [Vec<bool>],
    order_a: &'a [usize],
    order_b: &'a [usize],
}

fn ancestry(t: &SyntaxTree) -> Vec<Vec<bool>> {
    let n = t.node_count();
    let mut anc = vec![vec![false; n]; n];
    // parent links, not index ranges, so the oracle does not lean on the
    // pre-order layout the engine uses
    for v in 0..n {
        let mut cur = t.node(v).parent;
        while let Some(p) = cur {
            anc[p][v] = true;
            cur = t.node(p).parent;
        }
    }
    anc
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

fn search(i: usize, pairs: &mut Vec<(usize, usize)>, renames: u64, ctx: &Ctx<'_>, best: &mut u64) {
    let mapped = pairs.len() as u64;
    // lower bound: every remaining left node may still be mapped
    let unmapped_left_so_far = i as u64 - mapped;
    if renames + unmapped_left_so_far >= *best {
        return;
    }
    if i == ctx.na {
        let cost = renames + (ctx.na as u64 - mapped) + (ctx.nb as u64 - mapped);
        if cost < *best {
            *best = cost;
        }
        return;
    }
    // option 1: delete node i
    search(i + 1, pairs, renames, ctx, best);
    // option 2: map i to some j
    for j in 0..ctx.nb {
        if pairs.iter().any(|&(_, q)| q == j) {
            continue;
        }
        let ok = pairs.iter().all(|&(p, q)| {
            ctx.anc_a[p][i] == ctx.anc_b[q][j]
                && ctx.anc_a[i][p] == ctx.anc_b[j][q]
                && ctx.order_a[p].cmp(&ctx.order_a[i]) == ctx.order_b[q].cmp(&ctx.order_b[j])
        });
        if !ok {
            continue;
        }
        let r = u64::from(ctx.la[i] != ctx.lb[j]);
        pairs.push((i, j));
        search(i + 1, pairs, renames + r, ctx, best);
        pairs.pop();
    }
}

/// Longest common subsequence length by enumerating every subsequence of the
/// shorter input. Exponential; inputs of a dozen items at most.
pub fn brute_force_lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let n = short.len();
    assert!(n <= 20, "brute-force LCS input too long");
    let mut best = 0;
    for mask in 0u32..(1u32 << n) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let subseq: Vec<&T> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| &short[k]).collect();
        if is_subsequence(&subseq, long) {
            best = len;
        }
    }
    best
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|h| h == *x))
}

/// Multiset Jaccard by expanding both bags into explicit element lists and
/// pairing equal elements one by one.
pub fn brute_force_multiset_jaccard<T: PartialEq + Clone>(a: &[T], b: &[T]) -> f64 {
    let mut remaining: Vec<Option<T>> = b.iter().cloned().map(Some).collect();
    let mut inter = 0usize;
    for x in a {
        if let Some(slot) = remaining.iter_mut().find(|s| s.as_ref() == Some(x)) {
            *slot = None;
            inter += 1;
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Population variance by the textbook two-pass route.
pub fn two_pass_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mean = sum / n;
    let mut acc = 0.0;
    for x in xs {
        acc += (x - mean) * (x - mean);
    }
    acc / n
}


/// Copy of `tree` with the subtree rooted at `at` swapped for `replacement`.
pub fn replace_subtree(tree: &SyntaxTree, at: usize, replacement: &SyntaxTree) -> SyntaxTree {
    fn emit(src: &SyntaxTree, id: usize, out: &mut Vec<SyntaxNode>, swap: Option<(usize, &SyntaxTree)>) -> usize {
        if let Some((at, rep)) = swap {
            if id == at {
                return emit(rep, 0, out, None);
            }
        }
        let new_id = out.len();
        let mut node = src.node(id).clone();
        node.children.clear();
        out.push(node);
        for &c in &src.node(id).children {
            let child = emit(src, c, out, swap);
            out[new_id].children.push(child);
        }
        new_id
    }
    let mut out = Vec::with_capacity(tree.node_count() + replacement.node_count());
    emit(tree, 0, &mut out, Some((at, replacement)));
    SyntaxTree::from_nodes(out).expect("splice keeps pre-order")
}

/// A random tree of `n` nodes and a copy with one non-root subtree of at
/// most `max_fraction * n` nodes replaced by a fresh random subtree no
/// larger than that bound.
pub fn localized_edit_pair<R: Rng>(rng: &mut R, n: usize, max_fraction: f64, alphabet: &[&str]) -> (SyntaxTree, SyntaxTree) {
    let limit = ((n as f64 * max_fraction).floor() as usize).max(1);
    let tree = random_tree(rng, n, alphabet);
    let candidates: Vec<usize> = (1..n).filter(|&i| tree.subtree_size(i) <= limit).collect();
    let at = candidates[rng.random_range(0..candidates.len())];
    let size = rng.random_range(1..=limit);
    let replacement = random_tree(rng, size, alphabet);
    let edited = replace_subtree(&tree, at, &replacement);
    (tree, edited)
}
