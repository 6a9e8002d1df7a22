//! HTTP clients for an external completion model and embedding model.
//!
//! Contract (both JSON over POST, `Authorization: Bearer $AGENTREE_LLM_TOKEN`
//! when the token is set):
//!
//! * `$AGENTREE_LLM_URL`: request `{"prompt": "..."}`, response `{"text": "..."}`.
//! * `$AGENTREE_EMBED_URL`: request `{"input": "..."}`, response
//!   `{"embedding": [f64; 300]}`.
//!
//! Leaving a URL unset selects offline behaviour: prompts are echoed and the
//! built-in embedder is used.

use std::sync::Arc;
use std::time::Duration;

use agentree_core::projection::{embed_code, ClientError, EMBEDDING_DIM};
use serde::Deserialize;
use tokio::sync::Semaphore;

pub const LLM_URL_ENV: &str = "AGENTREE_LLM_URL";
pub const EMBED_URL_ENV: &str = "AGENTREE_EMBED_URL";
pub const TOKEN_ENV: &str = "AGENTREE_LLM_TOKEN";

const MAX_IN_FLIGHT: usize = 4;
const TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
pub struct HttpClient {
    http: reqwest::Client,
    url: String,
    token: Option<String>,
    permits: Arc<Semaphore>,
}

#[derive(Deserialize)]
struct TextResponse {
    text: String,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

impl HttpClient {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Self {
        let http = reqwest::Client::builder()
            .timeout(TIMEOUT)
            .build()
            .expect("default TLS-free client builds");
        HttpClient {
            http,
            url: url.into(),
            token,
            permits: Arc::new(Semaphore::new(MAX_IN_FLIGHT)),
        }
    }

    /// Completion client from the environment, if configured.
    pub fn llm_from_env() -> Option<Self> {
        let url = std::env::var(LLM_URL_ENV).ok().filter(|u| !u.is_empty())?;
        Some(HttpClient::new(url, std::env::var(TOKEN_ENV).ok()))
    }

    pub fn embedder_from_env() -> Option<Self> {
        let url = std::env::var(EMBED_URL_ENV).ok().filter(|u| !u.is_empty())?;
        Some(HttpClient::new(url, std::env::var(TOKEN_ENV).ok()))
    }

    async fn post<T: for<'de> Deserialize<'de>>(&self, body: serde_json::Value) -> Result<T, ClientError> {
        let _permit = self.permits.acquire().await.map_err(|e| ClientError {
            message: e.to_string(),
            retryable: false,
        })?;
        let mut req = self.http.post(&self.url).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().await.map_err(|e| ClientError {
            message: format!("request to {} failed: {e}", self.url),
            retryable: e.is_timeout() || e.is_connect(),
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ClientError {
                message: format!("{} returned {status}", self.url),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        resp.json().await.map_err(|e| ClientError {
            message: format!("bad response from {}: {e}", self.url),
            retryable: false,
        })
    }

    pub async fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let r: TextResponse = self.post(serde_json::json!({ "prompt": prompt })).await?;
        Ok(r.text)
    }

    pub async fn embed(&self, code: &str) -> Result<Vec<f64>, ClientError> {
        let r: EmbedResponse = self.post(serde_json::json!({ "input": code })).await?;
        if r.embedding.len() != EMBEDDING_DIM || r.embedding.iter().any(|x| !x.is_finite()) {
            return Err(ClientError {
                message: format!("embedding has {} components or non-finite values", r.embedding.len()),
                retryable: false,
            });
        }
        Ok(r.embedding)
    }
}

/// Embeds with the external client when configured, falling back to the
/// built-in embedder per snippet. Returns the vectors and the number of
/// fallbacks.
pub async fn embed_all(codes: &[String], client: Option<&HttpClient>) -> (Vec<Vec<f64>>, usize) {
    let Some(client) = client else {
        return (codes.iter().map(|c| embed_code(c)).collect(), 0);
    };
    let mut out = Vec::with_capacity(codes.len());
    let mut fallbacks = 0;
    for code in codes {
        match client.embed(code).await {
            Ok(v) => out.push(v),
            Err(e) => {
                tracing::warn!("external embedding failed, using built-in embedder: {e}");
                fallbacks += 1;
                out.push(embed_code(code));
            }
        }
    }
    (out, fallbacks)
}
