//! LLM-level views: code embeddings, 2-D projections and the prompt used to
//! ask an external LLM to contrast two selections of code.

mod embed;
mod pca;
mod tsne;

pub use embed::{code_tokens, embed_code, embed_code_dim, token_hash, EMBEDDING_DIM};
pub use pca::{pca_2d, PcaResult};
pub use tsne::{
    initial_layout, joint_affinities, tsne, tsne_with, validate as validate_tsne_config, TsneConfig, TsneProgress,
    TsneResult,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("vector {index} has length {len}, expected {expected}")]
    Dimension { index: usize, len: usize, expected: usize },
    #[error("vector {index} has a non-finite component")]
    NonFinite { index: usize },
    #[error("perplexity {perplexity} must satisfy 3 <= perplexity < n/3 (n = {n})")]
    Perplexity { perplexity: f64, n: usize },
    #[error("{0}")]
    Config(String),
    #[error("projection algorithm {0:?} is not supported")]
    Unsupported(Algorithm),
    #[error("cancelled")]
    Cancelled,
}

pub(crate) fn check_vectors(x: &[Vec<f64>]) -> Result<(), ProjectionError> {
    let Some(first) = x.first() else {
        return Ok(());
    };
    for (index, v) in x.iter().enumerate() {
        if v.len() != first.len() {
            return Err(ProjectionError::Dimension {
                index,
                len: v.len(),
                expected: first.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(ProjectionError::NonFinite { index });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pca,
    Tsne,
    /// Reserved; always rejected.
    Umap,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pca" => Ok(Algorithm::Pca),
            "tsne" => Ok(Algorithm::Tsne),
            "umap" => Ok(Algorithm::Umap),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// Identifies the node a point stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointRef {
    pub run_id: String,
    pub node_id: usize,
    pub llm_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub x: f64,
    pub y: f64,
    pub run_id: String,
    pub node_id: usize,
    pub llm_id: String,
}

fn attach(coords: Vec<[f64; 2]>, refs: &[PointRef]) -> Vec<ProjectionPoint> {
    coords
        .into_iter()
        .zip(refs)
        .map(|([x, y], r)| ProjectionPoint {
            x,
            y,
            run_id: r.run_id.clone(),
            node_id: r.node_id,
            llm_id: r.llm_id.clone(),
        })
        .collect()
}

fn check_refs(vectors: &[Vec<f64>], refs: &[PointRef]) -> Result<(), ProjectionError> {
    if vectors.len() != refs.len() {
        return Err(ProjectionError::Config(format!(
            "{} vectors but {} point references",
            vectors.len(),
            refs.len()
        )));
    }
    Ok(())
}

pub fn project_pca(vectors: &[Vec<f64>], refs: &[PointRef]) -> Result<Vec<ProjectionPoint>, ProjectionError> {
    check_refs(vectors, refs)?;
    Ok(attach(pca_2d(vectors)?.coords, refs))
}

pub fn project_tsne(
    vectors: &[Vec<f64>],
    refs: &[PointRef],
    cfg: &TsneConfig,
) -> Result<Vec<ProjectionPoint>, ProjectionError> {
    check_refs(vectors, refs)?;
    Ok(attach(tsne(vectors, cfg)?.coords, refs))
}

/// Dispatches on the algorithm; t-SNE uses `cfg`.
pub fn project(
    algorithm: Algorithm,
    vectors: &[Vec<f64>],
    refs: &[PointRef],
    cfg: &TsneConfig,
) -> Result<Vec<ProjectionPoint>, ProjectionError> {
    match algorithm {
        Algorithm::Pca => project_pca(vectors, refs),
        Algorithm::Tsne => project_tsne(vectors, refs, cfg),
        Algorithm::Umap => Err(ProjectionError::Unsupported(Algorithm::Umap)),
    }
}

const PROMPT_HEAD: &str = "You are given two collections of code. Summarize the difference between them. The first collection is ";
const PROMPT_MID: &str = ", the second collection is ";
const PROMPT_TAIL: &str = ". Please be concise in your response and use bullet points.";

/// Length of the fixed template text around the two collections.
pub const PROMPT_OVERHEAD: usize = PROMPT_HEAD.len() + PROMPT_MID.len() + PROMPT_TAIL.len();

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("code collection {0} is empty")]
pub struct EmptyCollection(pub u8);

/// Joins each collection with newlines and fills the comparison template.
pub fn build_comparison_prompt<S: AsRef<str>>(code1: &[S], code2: &[S]) -> Result<String, EmptyCollection> {
    if code1.is_empty() {
        return Err(EmptyCollection(1));
    }
    if code2.is_empty() {
        return Err(EmptyCollection(2));
    }
    let join = |c: &[S]| c.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("\n");
    Ok(format!("{PROMPT_HEAD}{}{PROMPT_MID}{}{PROMPT_TAIL}", join(code1), join(code2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRequest {
    pub code1: String,
    pub code2: String,
    pub prompt: String,
    pub response: Option<String>,
}

impl ComparisonRequest {
    pub fn new<S: AsRef<str>>(code1: &[S], code2: &[S]) -> Result<Self, EmptyCollection> {
        let prompt = build_comparison_prompt(code1, code2)?;
        let join = |c: &[S]| c.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("\n");
        Ok(ComparisonRequest {
            code1: join(code1),
            code2: join(code2),
            prompt,
            response: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ClientError {
    pub message: String,
    /// Whether the same call may succeed if retried (timeouts, 5xx, 429).
    pub retryable: bool,
}

/// A text-completion backend.
pub trait LlmClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

/// An external embedding backend.
pub trait EmbeddingClient {
    fn embed(&self, code: &str) -> Result<Vec<f64>, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    /// True when no client was configured and `text` is the prompt itself.
    pub offline: bool,
}

/// Asks the client to summarize; without a client, echoes the prompt
/// marked offline. The response is stored on the request.
pub fn summarize_difference(
    req: &mut ComparisonRequest,
    client: Option<&dyn LlmClient>,
) -> Result<Summary, ClientError> {
    let Some(client) = client else {
        return Ok(Summary {
            text: req.prompt.clone(),
            offline: true,
        });
    };
    let text = client.complete(&req.prompt)?;
    req.response = Some(text.clone());
    Ok(Summary { text, offline: false })
}

/// Uses the external embedder when given, falling back to the built-in one
/// if it fails or returns a malformed vector. The second value explains a
/// fallback.
pub fn embed_with(code: &str, client: Option<&dyn EmbeddingClient>) -> (Vec<f64>, Option<String>) {
    let Some(client) = client else {
        return (embed_code(code), None);
    };
    match client.embed(code) {
        Ok(v) if v.len() == EMBEDDING_DIM && v.iter().all(|x| x.is_finite()) => (v, None),
        Ok(v) => {
            let warning = format!("external embedding had {} components or non-finite values", v.len());
            tracing::warn!("{warning}; using built-in embedder");
            (embed_code(code), Some(warning))
        }
        Err(e) => {
            tracing::warn!("external embedding failed: {e}; using built-in embedder");
            (embed_code(code), Some(e.message))
        }
    }
}
