//! Client for the `/embed` inference service.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_model, checked_pair, EmbedError, EmbeddingProvider, EmbeddingVector, ProviderKind};
use crate::corpus::FunctionPair;

/// Base URL of the embedding service, e.g. `http://127.0.0.1:8091`.
pub const EMBED_URL_ENV: &str = "RRS_EMBED_URL";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub model_ids: Vec<String>,
    pub max_in_flight: usize,
    /// Extra attempts after the first one fails.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model_ids: Vec<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            model_ids,
            max_in_flight: 4,
            retries: 2,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the base URL from the environment.
    pub fn from_env(model_ids: Vec<String>) -> Result<Self, EmbedError> {
        match std::env::var(EMBED_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Ok(Self::new(url.trim(), model_ids)),
            _ => Err(EmbedError::Service(format!("{EMBED_URL_ENV} is not set"))),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model_id: &'a str,
    texts: [&'a str; 2],
}

#[derive(Deserialize)]
struct EmbedResponse {
    model_id: String,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpProvider {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider").field("cfg", &self.cfg).finish()
    }
}

enum Attempt {
    Retry(EmbedError),
    Fatal(EmbedError),
}

impl HttpProvider {
    pub fn new(cfg: HttpConfig) -> Result<Self, EmbedError> {
        if cfg.max_in_flight == 0 {
            return Err(EmbedError::Service("max_in_flight must be at least 1".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| EmbedError::Service(e.to_string()))?;
        let gate = Gate { free: Mutex::new(cfg.max_in_flight), cv: Condvar::new() };
        Ok(HttpProvider { cfg, client, gate })
    }

    fn endpoint(&self) -> String {
        format!("{}/embed", self.cfg.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, model_id: &str, texts: [&str; 2]) -> Result<EmbedResponse, Attempt> {
        let _permit = self.gate.acquire();
        let resp = self
            .client
            .post(self.endpoint())
            .json(&EmbedRequest { model_id, texts })
            .send()
            .map_err(|e| Attempt::Retry(EmbedError::Service(e.to_string())))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            let err = EmbedError::Status { status: status.as_u16(), body };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        resp.json::<EmbedResponse>()
            .map_err(|e| Attempt::Fatal(EmbedError::Service(format!("bad response body: {e}"))))
    }

    fn request(&self, model_id: &str, texts: [&str; 2]) -> Result<EmbedResponse, EmbedError> {
        let mut delay = self.cfg.backoff;
        let mut tries = 0;
        loop {
            match self.attempt(model_id, texts) {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    if tries == self.cfg.retries {
                        return Err(e);
                    }
                    log::warn!("embed request for {model_id} failed ({e}), retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    tries += 1;
                }
            }
        }
    }
}

impl EmbeddingProvider for HttpProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::HttpService
    }

    fn model_ids(&self) -> &[String] {
        &self.cfg.model_ids
    }

    fn get_pair_embeddings(
        &self,
        pair: &FunctionPair,
        model_id: &str,
    ) -> Result<(EmbeddingVector, EmbeddingVector), EmbedError> {
        check_model(self, model_id)?;
        let resp = self.request(model_id, [&pair.vuln_source, &pair.benign_source])?;
        if resp.model_id != model_id {
            return Err(EmbedError::Service(format!("asked for {model_id}, got {}", resp.model_id)));
        }
        let [x, y]: [Vec<f64>; 2] = resp
            .vectors
            .try_into()
            .map_err(|v: Vec<_>| EmbedError::Service(format!("expected 2 vectors, got {}", v.len())))?;
        let (x, y) = checked_pair(EmbeddingVector::new(model_id, x)?, EmbeddingVector::new(model_id, y)?)?;
        if x.dim() != resp.dim {
            return Err(EmbedError::DimensionMismatch { left: resp.dim, right: x.dim() });
        }
        Ok((x, y))
    }
}
