//! Seeded inputs shared by the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrs_core::astkit::SyntaxTree;
use rrs_core::embedkit::ModelSimilarity;
use rrs_core::oracle::localized_edit_pair;
use rrs_core::scoring::PairSignals;

const ALPHABET: &[&str] = &["decl", "call", "ident", "if", "ret", "expr", "lit", "field"];

/// A tree of `n` nodes and a copy with one small subtree replaced.
pub fn edited_pair(seed: u64, n: usize) -> (SyntaxTree, SyntaxTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    localized_edit_pair(&mut rng, n, 0.1, ALPHABET)
}

/// `n` pairs of five-model signals.
pub fn signal_batch(seed: u64, n: usize) -> Vec<PairSignals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let per_model = (0..5)
                .map(|m| ModelSimilarity {
                    model_id: format!("m{m}"),
                    cosine: rng.random_range(0.5..1.0),
                    dot: 0.0,
                    l1: 0.0,
                    l2: 0.0,
                    linf: 0.0,
                })
                .collect();
            PairSignals::new(format!("p{i}"), per_model, rng.random()).expect("signals in range")
        })
        .collect()
}
