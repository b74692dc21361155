//! Client for an embedding provider speaking
//! `POST /embed {texts} -> {model_id, vectors}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("invalid provider endpoint `{0}`")]
    Endpoint(String),
    #[error("embedding provider timed out")]
    Timeout,
    #[error("embedding provider unreachable: {0}")]
    Transport(String),
    #[error("embedding provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("embedding provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("embedding provider returned a vector of width {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding provider returned a non-finite value")]
    NonFinite,
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

impl ProviderError {
    fn is_transient(&self) -> bool {
        match self {
            ProviderError::Timeout | ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status >= 500 || *status == 429,
            _ => false,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub model_id: String,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct EmbeddingProviderClient {
    endpoint: Url,
    batch_size: usize,
    retries: u32,
    /// Expected width; the first batch fixes it when unset.
    dim: Option<usize>,
    http: reqwest::Client,
}

impl EmbeddingProviderClient {
    /// `endpoint` is the provider base address; requests go to `<endpoint>/embed`.
    pub fn new(
        endpoint: &str,
        batch_size: usize,
        timeout: Duration,
        retries: u32,
        dim: Option<usize>,
    ) -> Result<Self, ProviderError> {
        let base = Url::parse(endpoint).map_err(|_| ProviderError::Endpoint(endpoint.to_string()))?;
        let endpoint = base.join("embed").map_err(|_| ProviderError::Endpoint(endpoint.to_string()))?;
        let http =
            reqwest::Client::builder().timeout(timeout).build().map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(EmbeddingProviderClient { endpoint, batch_size: batch_size.max(1), retries, dim, http })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    async fn post_once(&self, texts: &[String]) -> Result<ProviderResponse, ProviderError> {
        let resp = self.http.post(self.endpoint.clone()).json(&EmbedRequest { texts }).send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(ProviderError::Status { status: status.as_u16(), body });
        }
        resp.json::<ProviderResponse>().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Malformed(e.to_string())
            }
        })
    }

    async fn post_batch(&self, texts: &[String]) -> Result<ProviderResponse, ProviderError> {
        let mut attempt = 0;
        loop {
            match self.post_once(texts).await {
                Err(e) if e.is_transient() && attempt < self.retries => {
                    attempt += 1;
                    tracing::warn!(attempt, error = %e, "retrying embedding request");
                    tokio::time::sleep(Duration::from_millis(50 * u64::from(attempt))).await;
                }
                other => return other,
            }
        }
    }

    /// One vector per text, in input order. Batches are sent sequentially.
    pub async fn fetch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut dim = self.dim;
        for batch in texts.chunks(self.batch_size) {
            let resp = self.post_batch(batch).await?;
            if resp.vectors.len() != batch.len() {
                return Err(ProviderError::CountMismatch { expected: batch.len(), got: resp.vectors.len() });
            }
            for v in resp.vectors {
                let expected = *dim.get_or_insert(v.len());
                if v.len() != expected {
                    return Err(ProviderError::Dimension { expected, got: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ProviderError::NonFinite);
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}
