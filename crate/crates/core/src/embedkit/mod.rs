//! Per-model function embeddings and the vector similarity family.

mod http;
mod mock;
mod store;

use serde::{Deserialize, Serialize};

use crate::corpus::FunctionPair;

pub use http::{HttpConfig, HttpProvider, EMBED_URL_ENV};
pub use mock::{MockProvider, DEFAULT_MODELS};
pub use store::{precompute_store, read_store, write_store, FileStore, StoreRecord};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("vector is empty")]
    Empty,
    #[error("vector has a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("zero-norm vector, cosine is undefined")]
    ZeroNorm,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("model {0:?} is not served by this provider")]
    UnknownModel(String),
    #[error("no stored vector for pair {pair_id:?}, model {model_id:?}, side {side}")]
    Missing { pair_id: String, model_id: String, side: Side },
    #[error("embedding service: {0}")]
    Service(String),
    #[error("embedding service returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Store { path: String, line: usize, message: String },
}

/// Which function of a pair a vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Vuln,
    Benign,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Vuln => "vuln",
            Side::Benign => "benign",
        })
    }
}

/// A dense embedding produced by one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingVector {
    model_id: String,
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(model_id: impl Into<String>, values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(i));
        }
        Ok(EmbeddingVector { model_id: model_id.into(), values })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn same_dim(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<(), EmbedError> {
    if x.dim() != y.dim() {
        return Err(EmbedError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(())
}

/// `x·y / (‖x‖‖y‖)`, clamped to [-1, 1] against rounding.
pub fn cosine(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<f64, EmbedError> {
    same_dim(x, y)?;
    let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
    for (a, b) in x.values.iter().zip(&y.values) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    cosine_from_parts(dot, nx, ny)
}

fn cosine_from_parts(dot: f64, nx: f64, ny: f64) -> Result<f64, EmbedError> {
    if nx == 0.0 || ny == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok((dot / (nx.sqrt() * ny.sqrt())).clamp(-1.0, 1.0))
}

/// Similarity and distance measures between the two embeddings of one pair
/// under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSimilarity {
    pub model_id: String,
    pub cosine: f64,
    pub dot: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Cosine, dot product, and the L1/L2/L-infinity distances in one pass.
pub fn distance_family(x: &EmbeddingVector, y: &EmbeddingVector) -> Result<ModelSimilarity, EmbedError> {
    same_dim(x, y)?;
    let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
    let (mut l1, mut l2sq, mut linf) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in x.values.iter().zip(&y.values) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
        let d = (a - b).abs();
        l1 += d;
        l2sq += d * d;
        linf = linf.max(d);
    }
    Ok(ModelSimilarity {
        model_id: x.model_id.clone(),
        cosine: cosine_from_parts(dot, nx, ny)?,
        dot,
        l1,
        l2: l2sq.sqrt(),
        linf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    FileStore,
    HttpService,
    Mock,
}

impl std::fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProviderKind::FileStore => "file_store",
            ProviderKind::HttpService => "http_service",
            ProviderKind::Mock => "mock",
        })
    }
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "file_store" | "file" | "store" => Ok(ProviderKind::FileStore),
            "http_service" | "http" => Ok(ProviderKind::HttpService),
            "mock" => Ok(ProviderKind::Mock),
            other => Err(format!("unknown provider {other:?}")),
        }
    }
}

/// Source of per-model embeddings. Implementations must return the same
/// vectors for repeated queries and be usable from several threads.
pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    fn model_ids(&self) -> &[String];

    /// Vectors for `(vuln_source, benign_source)`.
    fn get_pair_embeddings(
        &self,
        pair: &FunctionPair,
        model_id: &str,
    ) -> Result<(EmbeddingVector, EmbeddingVector), EmbedError>;
}

fn check_model(provider: &dyn EmbeddingProvider, model_id: &str) -> Result<(), EmbedError> {
    if provider.model_ids().iter().any(|m| m == model_id) {
        Ok(())
    } else {
        Err(EmbedError::UnknownModel(model_id.to_string()))
    }
}

fn checked_pair(
    x: EmbeddingVector,
    y: EmbeddingVector,
) -> Result<(EmbeddingVector, EmbeddingVector), EmbedError> {
    same_dim(&x, &y)?;
    Ok((x, y))
}

/// Similarity of one pair under every model the provider serves, in
/// provider order.
pub fn pair_similarities(
    provider: &dyn EmbeddingProvider,
    pair: &FunctionPair,
) -> Result<Vec<ModelSimilarity>, EmbedError> {
    provider
        .model_ids()
        .iter()
        .map(|m| {
            let (x, y) = provider.get_pair_embeddings(pair, m)?;
            distance_family(&x, &y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new("m", xs.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&v(&[1.0, 2.0, 3.0]), &v(&[1.0, 2.0, 3.0])).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((cosine(&v(&[1.0, 1.0]), &v(&[2.0, 2.0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_norm_is_an_error() {
        assert!(matches!(cosine(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(EmbedError::ZeroNorm)));
    }

    #[test]
    fn mismatched_dims() {
        assert!(matches!(
            distance_family(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(EmbedError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn family_on_axis_vectors() {
        let s = distance_family(&v(&[3.0, 0.0]), &v(&[0.0, 4.0])).unwrap();
        // scalar recomputation
        let (a, b) = ([3.0f64, 0.0], [0.0f64, 4.0]);
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        let l2 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert_eq!((s.l1, s.l2, s.linf, s.dot), (7.0, 5.0, 4.0, 0.0));
        assert_eq!((s.l1, s.l2), (l1, l2));
    }

    #[test]
    fn identity() {
        let x = v(&[0.3, -1.5, 2.0]);
        let s = distance_family(&x, &x).unwrap();
        assert_eq!((s.l1, s.l2, s.linf), (0.0, 0.0, 0.0));
        assert!((s.cosine - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(matches!(EmbeddingVector::new("m", vec![]), Err(EmbedError::Empty)));
        assert!(matches!(EmbeddingVector::new("m", vec![1.0, f64::NAN]), Err(EmbedError::NonFinite(1))));
    }
}
