//! HTTP JSON API.
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | GET | `/health` | `{"status":"ok"}` |
//! | GET | `/runs` | `[RunSummary]` |
//! | GET | `/runs/{id}` | `RunSummary` |
//! | GET | `/runs/{id}/tree` | `TreeResponse` |
//! | GET | `/runs/{id}/nodes/{n}` | the journal node |
//! | GET | `/runs/{id}/diff?a=&b=` | `DiffResponse` |
//! | GET | `/runs/{id}/similarity` | `SimilarityResponse` |
//! | GET | `/runs/{id}/findings` | `FindingsResponse` |
//! | GET | `/runsets` | `[RunsetSummary]` |
//! | GET | `/runsets/{llm}/distance` | `DistanceResponse` |
//! | GET | `/runsets/{llm}/dendrogram?clusters=` | `DendrogramResponse` |
//! | GET | `/runsets/{llm}/order?key=` | `OrderResponse` |
//! | GET | `/packages` | `PackageUsageTable` |
//! | GET | `/projection?algo=pca\|tsne&llm=&perplexity=&iterations=&seed=` | `ProjectionResponse`, or `202 {"job_id"}` for t-SNE not yet computed |
//! | GET | `/jobs/{id}` | `JobStatus` |
//! | DELETE | `/jobs/{id}` | `JobStatus` after requesting cancellation |
//! | POST | `/compare` | `CompareRequest` in, `CompareResponse` out |
//!
//! Errors are `{"error": "..."}` with status 400 (bad parameters), 404
//! (unknown run, node, llm or job) or 500.

use std::sync::Arc;

use agentree_core::projection::{tsne_with, Algorithm, TsneConfig};
use agentree_core::tree_analytics::OrderKey;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::analysis::{self, AnalysisError, CompareRequest, CompareResponse};
use crate::cache::{cache_key, Cache};
use crate::clients::{embed_all, HttpClient};
use crate::jobs::{JobState, Jobs};
use crate::workspace::{Snapshot, Workspace};

#[derive(Debug, Clone)]
pub struct AppState {
    pub workspace: Arc<Workspace>,
    pub cache: Arc<Cache>,
    pub jobs: Arc<Jobs>,
    pub llm: Option<HttpClient>,
    pub embedder: Option<HttpClient>,
}

impl AppState {
    /// State over a workspace with an on-disk cache and clients taken from
    /// the environment.
    pub fn new(workspace: Workspace) -> Self {
        let cache = Cache::new(Some(workspace.cache_dir()));
        AppState {
            workspace: Arc::new(workspace),
            cache: Arc::new(cache),
            jobs: Arc::new(Jobs::default()),
            llm: HttpClient::llm_from_env(),
            embedder: HttpClient::embedder_from_env(),
        }
    }

    /// Like [`AppState::new`] but never contacts external services.
    pub fn offline(workspace: Workspace) -> Self {
        AppState {
            llm: None,
            embedder: None,
            ..AppState::new(workspace)
        }
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let status = match e {
            AnalysisError::UnknownRun(_) | AnalysisError::UnknownNode { .. } | AnalysisError::UnknownLlm(_) => {
                StatusCode::NOT_FOUND
            }
            AnalysisError::BadRequest(_) | AnalysisError::Analytics(_) => StatusCode::BAD_REQUEST,
            AnalysisError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: serde::Serialize>(v: T) -> ApiResult {
    Ok(Json(v).into_response())
}

fn to_value<T: serde::Serialize>(v: T) -> Result<Value, AnalysisError> {
    serde_json::to_value(v).map_err(|e| AnalysisError::Internal(e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/tree", get(get_tree))
        .route("/runs/{id}/nodes/{n}", get(get_node))
        .route("/runs/{id}/diff", get(get_diff))
        .route("/runs/{id}/similarity", get(get_similarity))
        .route("/runs/{id}/findings", get(get_findings))
        .route("/runsets", get(list_runsets))
        .route("/runsets/{llm}/distance", get(get_distance))
        .route("/runsets/{llm}/dendrogram", get(get_dendrogram))
        .route("/runsets/{llm}/order", get(get_order))
        .route("/packages", get(get_packages))
        .route("/projection", get(get_projection))
        .route("/jobs/{id}", get(get_job).delete(cancel_job))
        .route("/compare", axum::routing::post(post_compare))
        .with_state(state)
}

async fn list_runs(State(s): State<AppState>) -> ApiResult {
    ok(analysis::runs(&s.workspace.snapshot()))
}

async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let snap = s.workspace.snapshot();
    let e = snap.run(&id).ok_or(AnalysisError::UnknownRun(id))?;
    ok(analysis::run_summary(&e.run))
}

async fn get_tree(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(analysis::tree(&s.workspace.snapshot(), &id)?)
}

async fn get_node(State(s): State<AppState>, Path((id, n)): Path<(String, usize)>) -> ApiResult {
    ok(analysis::node(&s.workspace.snapshot(), &id, n)?)
}

#[derive(Deserialize)]
struct DiffQuery {
    a: usize,
    b: usize,
}

async fn get_diff(State(s): State<AppState>, Path(id): Path<String>, Query(q): Query<DiffQuery>) -> ApiResult {
    ok(analysis::diff(&s.workspace.snapshot(), &id, q.a, q.b)?)
}

fn run_hash(snap: &Snapshot, id: &str) -> Result<String, AnalysisError> {
    snap.run(id)
        .map(|e| e.hash.clone())
        .ok_or_else(|| AnalysisError::UnknownRun(id.to_string()))
}

fn runset_hash(snap: &Snapshot, llm: &str) -> Result<String, AnalysisError> {
    snap.runset_hash(llm)
        .ok_or_else(|| AnalysisError::UnknownLlm(llm.to_string()))
}

async fn get_similarity(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let snap = s.workspace.snapshot();
    let key = cache_key("similarity", "", &run_hash(&snap, &id)?);
    let v = s
        .cache
        .get_or_compute(&key, move || to_value(analysis::similarity(&snap, &id)?))
        .await?;
    ok(&*v)
}

async fn get_findings(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(analysis::findings(&s.workspace.snapshot(), &id)?)
}

async fn list_runsets(State(s): State<AppState>) -> ApiResult {
    ok(analysis::runsets(&s.workspace.snapshot()))
}

async fn cached_distance(s: &AppState, llm: &str) -> Result<Arc<Value>, AnalysisError> {
    let snap = s.workspace.snapshot();
    let key = cache_key("distance", llm, &runset_hash(&snap, llm)?);
    let llm = llm.to_string();
    s.cache
        .get_or_compute(&key, move || to_value(analysis::distance(&snap, &llm)?))
        .await
}

async fn get_distance(State(s): State<AppState>, Path(llm): Path<String>) -> ApiResult {
    ok(&*cached_distance(&s, &llm).await?)
}

#[derive(Deserialize)]
struct DendrogramQuery {
    clusters: Option<usize>,
}

async fn get_dendrogram(
    State(s): State<AppState>,
    Path(llm): Path<String>,
    Query(q): Query<DendrogramQuery>,
) -> ApiResult {
    let d = cached_distance(&s, &llm).await?;
    let d: analysis::DistanceResponse =
        serde_json::from_value((*d).clone()).map_err(|e| AnalysisError::Internal(e.to_string()))?;
    ok(analysis::dendrogram_from(&d, q.clusters)?)
}

#[derive(Deserialize)]
struct OrderQuery {
    key: String,
}

async fn get_order(State(s): State<AppState>, Path(llm): Path<String>, Query(q): Query<OrderQuery>) -> ApiResult {
    let key: OrderKey = q.key.parse().map_err(AnalysisError::BadRequest)?;
    let snap = s.workspace.snapshot();
    if key == OrderKey::TreeSimilarity {
        // reuse the cached distance matrix rather than recomputing it
        let d = cached_distance(&s, &llm).await?;
        let d: analysis::DistanceResponse =
            serde_json::from_value((*d).clone()).map_err(|e| AnalysisError::Internal(e.to_string()))?;
        let dend = analysis::dendrogram_from(&d, None)?;
        let order = dend.dendrogram.leaf_order;
        return ok(analysis::OrderResponse {
            llm_id: llm,
            key,
            run_ids: order.iter().map(|&i| d.run_ids[i].clone()).collect(),
            order,
        });
    }
    ok(analysis::order(&snap, &llm, key)?)
}

async fn get_packages(State(s): State<AppState>) -> ApiResult {
    let snap = s.workspace.snapshot();
    let key = cache_key("packages", "", &snap.all_hash());
    let v = s
        .cache
        .get_or_compute(&key, move || to_value(analysis::packages(&snap)))
        .await?;
    ok(&*v)
}

#[derive(Deserialize)]
struct ProjectionQuery {
    algo: String,
    llm: Option<String>,
    perplexity: Option<f64>,
    iterations: Option<usize>,
    seed: Option<u64>,
}

async fn get_projection(State(s): State<AppState>, Query(q): Query<ProjectionQuery>) -> ApiResult {
    let algo: Algorithm = q.algo.parse().map_err(AnalysisError::BadRequest)?;
    let snap = s.workspace.snapshot();
    let inputs = match &q.llm {
        Some(l) => runset_hash(&snap, l)?,
        None => snap.all_hash(),
    };
    let embedding = if s.embedder.is_some() { "external" } else { "builtin" };
    let llm = q.llm.clone();
    match algo {
        Algorithm::Umap => Err(AnalysisError::BadRequest("projection algorithm \"umap\" is not supported".into()).into()),
        Algorithm::Pca => {
            let key = cache_key("pca", &format!("{embedding};{llm:?}"), &inputs);
            if let Some(v) = s.cache.peek(&key) {
                return ok(&*v);
            }
            let (refs, codes) = analysis::projection_inputs(&snap, llm.as_deref())?;
            let (vectors, fallbacks) = embed_all(&codes, s.embedder.as_ref()).await;
            let v = s
                .cache
                .get_or_compute(&key, move || to_value(analysis::pca_response(&vectors, &refs, fallbacks)?))
                .await?;
            ok(&*v)
        }
        Algorithm::Tsne => {
            let defaults = TsneConfig::default();
            let cfg = TsneConfig {
                perplexity: q.perplexity.unwrap_or(defaults.perplexity),
                iterations: q.iterations.unwrap_or(defaults.iterations),
                seed: q.seed.unwrap_or(defaults.seed),
                ..defaults
            };
            let params = format!("{embedding};{llm:?};{};{};{}", cfg.perplexity, cfg.iterations, cfg.seed);
            let key = cache_key("tsne", &params, &inputs);
            if let Some(v) = s.cache.peek(&key) {
                return ok(&*v);
            }
            let (refs, codes) = analysis::projection_inputs(&snap, llm.as_deref())?;
            agentree_core::projection::validate_tsne_config(refs.len(), &cfg)
                .map_err(|e| AnalysisError::BadRequest(e.to_string()))?;
            let job_id = key[..16].to_string();
            let (job, created) = s.jobs.start(&job_id, cfg.iterations);
            if created {
                let state = s.clone();
                tokio::spawn(async move {
                    let (vectors, fallbacks) = embed_all(&codes, state.embedder.as_ref()).await;
                    let hook_job = job.clone();
                    let result = tokio::task::spawn_blocking(move || {
                        tsne_with(&vectors, &cfg, |p| hook_job.progress(p.iteration, p.total, p.kl))
                    })
                    .await;
                    match result {
                        Ok(Ok(r)) => {
                            let resp = analysis::ProjectionResponse {
                                algorithm: Algorithm::Tsne,
                                points: analysis::attach(&r.coords, &refs),
                                explained_variance_ratio: None,
                                kl: Some(r.kl),
                                embedding_fallbacks: fallbacks,
                            };
                            match serde_json::to_value(resp) {
                                Ok(v) => job.finish(Ok(state.cache.insert(&key, v))),
                                Err(e) => job.finish(Err((JobState::Failed, e.to_string()))),
                            }
                        }
                        Ok(Err(agentree_core::projection::ProjectionError::Cancelled)) => {
                            job.finish(Err((JobState::Cancelled, "cancelled".into())))
                        }
                        Ok(Err(e)) => job.finish(Err((JobState::Failed, e.to_string()))),
                        Err(e) => job.finish(Err((JobState::Failed, e.to_string()))),
                    }
                });
            }
            Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response())
        }
    }
}

async fn get_job(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let job = s
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown job {id:?}")))?;
    ok(job.status())
}

async fn cancel_job(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let job = s
        .jobs
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown job {id:?}")))?;
    job.cancel();
    ok(job.status())
}

async fn post_compare(State(s): State<AppState>, Json(req): Json<CompareRequest>) -> ApiResult {
    let mut creq = analysis::comparison_request(&s.workspace.snapshot(), &req)?;
    let Some(client) = &s.llm else {
        return ok(CompareResponse {
            text: creq.prompt.clone(),
            prompt: creq.prompt,
            offline: true,
        });
    };
    match client.complete(&creq.prompt).await {
        Ok(text) => {
            creq.response = Some(text.clone());
            ok(CompareResponse {
                prompt: creq.prompt,
                text,
                offline: false,
            })
        }
        Err(e) => {
            let status = if e.retryable {
                StatusCode::SERVICE_UNAVAILABLE
            } else {
                StatusCode::BAD_GATEWAY
            };
            Ok((status, Json(json!({ "error": e.message, "retryable": e.retryable, "prompt": creq.prompt })))
                .into_response())
        }
    }
}
