//! Deterministic stand-in for a code language model.
//!
//! Each lexical token maps to a pseudo-random vector seeded from
//! `sha256(seed, model_id, token)`; a function's embedding is the normalized
//! sum over its tokens plus a small model-specific perturbation seeded from
//! the whole text. Edits that keep most tokens therefore keep cosine high,
//! and models disagree slightly, which is what the scoring stage needs to
//! exercise. Vectors depend only on (seed, model_id, text, dim), so fixtures
//! built with the mock are portable across machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{check_model, checked_pair, EmbedError, EmbeddingProvider, EmbeddingVector, ProviderKind};
use crate::corpus::FunctionPair;

/// The five models the scoring defaults are tuned around.
pub const DEFAULT_MODELS: [&str; 5] = ["CodeBERT", "UniXCoder", "GraphCodeBERT", "CodeT5-base", "CodeT5-770m"];

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    dim: usize,
    model_ids: Vec<String>,
}

impl MockProvider {
    pub fn new(seed: u64, dim: usize, model_ids: Vec<String>) -> Self {
        assert!(dim > 0, "mock dimension must be positive");
        MockProvider { seed, dim, model_ids }
    }

    pub fn with_default_models(seed: u64) -> Self {
        Self::new(seed, 64, DEFAULT_MODELS.iter().map(|s| s.to_string()).collect())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rng(&self, parts: &[&[u8]]) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn unit(&self, parts: &[&[u8]]) -> Vec<f64> {
        let mut rng = self.rng(parts);
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            if let Some(u) = normalize(v) {
                return u;
            }
        }
    }

    /// Perturbation weight for a model, in [0.05, 0.20).
    fn noise_scale(&self, model_id: &str) -> f64 {
        let mut rng = self.rng(&[b"scale", model_id.as_bytes()]);
        0.05 + 0.15 * rng.random::<f64>()
    }

    pub fn embed(&self, model_id: &str, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0; self.dim];
        for tok in tokens(text) {
            let v = self.unit(&[b"tok", model_id.as_bytes(), tok.as_bytes()]);
            for (a, b) in acc.iter_mut().zip(&v) {
                *a += b;
            }
        }
        let noise = self.unit(&[b"text", model_id.as_bytes(), text.as_bytes()]);
        let scale = self.noise_scale(model_id);
        let mut out = normalize(acc).unwrap_or_else(|| vec![0.0; self.dim]);
        for (a, b) in out.iter_mut().zip(&noise) {
            *a += scale * b;
        }
        let out = normalize(out).unwrap_or(noise);
        EmbeddingVector::new(model_id, out).expect("finite by construction")
    }
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// Identifier/number runs and single punctuation characters.
fn tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let word = c.is_alphanumeric() || c == '_';
        match (word, start) {
            (true, None) => start = Some(i),
            (true, Some(_)) => {}
            (false, s) => {
                if let Some(s) = s {
                    out.push(&text[s..i]);
                    start = None;
                }
                if !c.is_whitespace() {
                    out.push(&text[i..i + c.len_utf8()]);
                }
            }
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

impl EmbeddingProvider for MockProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Mock
    }

    fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    fn get_pair_embeddings(
        &self,
        pair: &FunctionPair,
        model_id: &str,
    ) -> Result<(EmbeddingVector, EmbeddingVector), EmbedError> {
        check_model(self, model_id)?;
        checked_pair(self.embed(model_id, &pair.vuln_source), self.embed(model_id, &pair.benign_source))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedkit::cosine;

    #[test]
    fn tokenizer() {
        assert_eq!(tokens("if (s->len>=2) x_1++;"), vec!["if", "(", "s", "-", ">", "len", ">", "=", "2", ")", "x_1", "+", "+", ";"]);
        assert!(tokens("  ").is_empty());
    }

    #[test]
    fn deterministic_and_unit() {
        let p = MockProvider::with_default_models(7);
        let a = p.embed("CodeBERT", "int f(void) { return 0; }");
        assert_eq!(a, p.embed("CodeBERT", "int f(void) { return 0; }"));
        let norm: f64 = a.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_edits_stay_close() {
        let p = MockProvider::with_default_models(7);
        let a = p.embed("CodeBERT", "int f(int n) { if (n > 10) return -1; return buf[n]; }");
        let b = p.embed("CodeBERT", "int f(int n) { if (n >= 10) return -1; return buf[n]; }");
        let c = p.embed("CodeBERT", "void g(char *s) { while (*s) putchar(*s++); }");
        let near = cosine(&a, &b).unwrap();
        let far = cosine(&a, &c).unwrap();
        assert!(near > 0.9, "{near}");
        assert!(near > far + 0.2, "{near} {far}");
    }

    #[test]
    fn seed_and_model_matter() {
        let a = MockProvider::with_default_models(1).embed("CodeBERT", "x");
        let b = MockProvider::with_default_models(2).embed("CodeBERT", "x");
        let c = MockProvider::with_default_models(1).embed("UniXCoder", "x");
        assert_ne!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn empty_text_still_embeds() {
        let v = MockProvider::with_default_models(3).embed("CodeBERT", "");
        assert!(v.values().iter().any(|x| *x != 0.0));
    }
}
