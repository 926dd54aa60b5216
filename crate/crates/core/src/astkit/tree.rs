use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One node of a [`SyntaxTree`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxNode {
    /// Grammar production name (`if_statement`, `identifier`, `(` ...).
    pub kind: String,
    /// Token text for leaves, empty for internal nodes.
    pub text: String,
    /// Ordered child indices into [`SyntaxTree::nodes`].
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// Byte range `(start, end)` in the parsed source.
    pub span: (usize, usize),
    pub is_error: bool,
}

impl SyntaxNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Ordered labeled rooted tree, nodes stored in pre-order with the root at
/// index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    nodes: Vec<SyntaxNode>,
    sizes: Vec<usize>,
}

/// Node label used for matching and edit costs: internal nodes compare by
/// kind, leaves by kind and token text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub kind: String,
    pub text: Option<String>,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.text {
            Some(text) => write!(f, "{}:{:?}", self.kind, text),
            None => f.write_str(&self.kind),
        }
    }
}

pub fn node_label(node: &SyntaxNode) -> Label {
    Label {
        kind: node.kind.clone(),
        text: node.is_leaf().then(|| node.text.clone()),
    }
}

/// Bag of labels, used for the Jaccard metric.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMultiset {
    counts: BTreeMap<Label, usize>,
}

impl LabelMultiset {
    pub fn insert(&mut self, label: Label) {
        *self.counts.entry(label).or_insert(0) += 1;
    }

    pub fn count(&self, label: &Label) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Total number of elements, counting multiplicity.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, usize)> {
        self.counts.iter().map(|(l, &c)| (l, c))
    }

    pub fn intersection_size(&self, other: &LabelMultiset) -> usize {
        self.counts
            .iter()
            .map(|(label, &c)| c.min(other.count(label)))
            .sum()
    }

    pub fn union_size(&self, other: &LabelMultiset) -> usize {
        self.len() + other.len() - self.intersection_size(other)
    }
}

impl FromIterator<Label> for LabelMultiset {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        let mut set = LabelMultiset::default();
        for label in iter {
            set.insert(label);
        }
        set
    }
}

/// Error raised when a node list does not describe a well-formed pre-order tree.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeShapeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("node {node}: {reason}")]
    Malformed { node: usize, reason: String },
}

impl SyntaxTree {
    /// Builds a tree from pre-order nodes, checking shape invariants. Parent
    /// links are recomputed from the child lists.
    pub fn from_nodes(mut nodes: Vec<SyntaxNode>) -> Result<Self, TreeShapeError> {
        if nodes.is_empty() {
            return Err(TreeShapeError::Empty);
        }
        for node in nodes.iter_mut() {
            node.parent = None;
        }
        // pre-order: every child index is greater than its parent, and each
        // subtree occupies a contiguous index range
        let mut stack = vec![0usize];
        let mut visited = vec![false; nodes.len()];
        visited[0] = true;
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(id) = stack.pop() {
            order.push(id);
            for &child in nodes[id].children.iter().rev() {
                if child >= nodes.len() || visited[child] {
                    return Err(TreeShapeError::Malformed {
                        node: id,
                        reason: format!("child {child} is out of range or shared"),
                    });
                }
                visited[child] = true;
                stack.push(child);
            }
        }
        if order.len() != nodes.len() {
            return Err(TreeShapeError::Malformed {
                node: 0,
                reason: format!("{} nodes reachable of {}", order.len(), nodes.len()),
            });
        }
        for (pos, &id) in order.iter().enumerate() {
            if pos != id {
                return Err(TreeShapeError::Malformed {
                    node: id,
                    reason: "nodes are not stored in pre-order".into(),
                });
            }
        }
        for id in 0..nodes.len() {
            let children = nodes[id].children.clone();
            for child in children {
                nodes[child].parent = Some(id);
            }
        }
        for (id, node) in nodes.iter().enumerate() {
            if !node.is_leaf() && !node.text.is_empty() {
                return Err(TreeShapeError::Malformed {
                    node: id,
                    reason: "internal node carries token text".into(),
                });
            }
            if let Some(p) = node.parent {
                let (ps, pe) = nodes[p].span;
                if node.span.0 < ps || node.span.1 > pe {
                    return Err(TreeShapeError::Malformed {
                        node: id,
                        reason: "span escapes parent span".into(),
                    });
                }
            }
        }
        Ok(SyntaxTree::with_sizes(nodes))
    }

    fn with_sizes(nodes: Vec<SyntaxNode>) -> SyntaxTree {
        let mut sizes = vec![1usize; nodes.len()];
        for id in (0..nodes.len()).rev() {
            if let Some(p) = nodes[id].parent {
                sizes[p] += sizes[id];
            }
        }
        SyntaxTree { nodes, sizes }
    }

    pub fn nodes(&self) -> &[SyntaxNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &SyntaxNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &SyntaxNode {
        &self.nodes[0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, id: usize) -> Label {
        node_label(&self.nodes[id])
    }

    pub fn has_error(&self) -> bool {
        self.nodes.iter().any(|n| n.is_error)
    }

    /// Node ids in pre-order, walking child links from the root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Node ids in post-order.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
            } else {
                stack.push((id, true));
                stack.extend(self.nodes[id].children.iter().rev().map(|&c| (c, false)));
            }
        }
        out
    }

    /// Number of nodes in the subtree rooted at `id`. Because nodes are in
    /// pre-order this is also the length of the subtree's index range.
    pub fn subtree_size(&self, id: usize) -> usize {
        self.sizes[id]
    }

    /// Copies the subtree rooted at `id` into a standalone tree.
    pub fn subtree(&self, id: usize) -> SyntaxTree {
        let size = self.subtree_size(id);
        let nodes = self.nodes[id..id + size]
            .iter()
            .enumerate()
            .map(|(i, n)| SyntaxNode {
                kind: n.kind.clone(),
                text: n.text.clone(),
                children: n.children.iter().map(|c| c - id).collect(),
                parent: if i == 0 { None } else { n.parent.map(|p| p - id) },
                span: n.span,
                is_error: n.is_error,
            })
            .collect();
        SyntaxTree::with_sizes(nodes)
    }

    pub fn is_ancestor(&self, ancestor: usize, node: usize) -> bool {
        ancestor < node && node < ancestor + self.subtree_size(ancestor)
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Applies `f` to every label, keeping the shape. Leaves keep their text
    /// unless `f` changes it.
    pub fn relabel(&self, mut f: impl FnMut(&Label) -> Label) -> SyntaxTree {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let label = f(&node_label(n));
                SyntaxNode {
                    kind: label.kind,
                    text: if n.is_leaf() { label.text.unwrap_or_default() } else { String::new() },
                    ..n.clone()
                }
            })
            .collect();
        SyntaxTree { nodes, sizes: self.sizes.clone() }
    }
}

/// Multiset of labels of all nodes, collected in pre-order.
pub fn node_multiset(tree: &SyntaxTree) -> LabelMultiset {
    tree.preorder().into_iter().map(|id| tree.label(id)).collect()
}
