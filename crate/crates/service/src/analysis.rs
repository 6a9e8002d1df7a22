//! Response payloads, each a direct function of the journals in a snapshot.
//! The HTTP layer only adds caching and status codes on top of these.

use agentree_core::code_analysis::{
    detect_identical_siblings, detect_repeated_bugs, line_diff, package_table, similarity_matrix, DiffResult,
    IdenticalGroup, PackageUsageTable, RepeatedBug, SimilarityMatrix,
};
use agentree_core::journal::{
    merge_forest, modified_line_count, run_stats, Aggregate, MergedTree, MetricDirection, NodeRecord, RunSet,
    RunStats, SolutionRun, Stage, Status,
};
use agentree_core::projection::{pca_2d, ComparisonRequest, PointRef, ProjectionPoint};
use agentree_core::tree_analytics::{
    distance_matrix, flat_clusters, hierarchical_cluster, order_roots, AnalyticsError, Dendrogram,
    DistanceMatrix, OrderKey,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workspace::Snapshot;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown run {0:?}")]
    UnknownRun(String),
    #[error("run {run} has no node {node}")]
    UnknownNode { run: String, node: usize },
    #[error("unknown llm {0:?}")]
    UnknownLlm(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Analytics(#[from] AnalyticsError),
    #[error("{0}")]
    Internal(String),
}

impl From<tokio::task::JoinError> for AnalysisError {
    fn from(e: tokio::task::JoinError) -> Self {
        AnalysisError::Internal(e.to_string())
    }
}

fn run<'a>(snap: &'a Snapshot, id: &str) -> Result<&'a SolutionRun, AnalysisError> {
    snap.run(id)
        .map(|e| &e.run)
        .ok_or_else(|| AnalysisError::UnknownRun(id.to_string()))
}

fn runset<'a>(snap: &'a Snapshot, llm: &str) -> Result<&'a RunSet, AnalysisError> {
    snap.runsets
        .get(llm)
        .ok_or_else(|| AnalysisError::UnknownLlm(llm.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub llm_id: String,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub n_drafts: usize,
    pub metric_direction: MetricDirection,
    pub stats: RunStats,
}

pub fn run_summary(run: &SolutionRun) -> RunSummary {
    RunSummary {
        run_id: run.run_id().to_string(),
        llm_id: run.llm_id().to_string(),
        n_nodes: run.len(),
        n_steps: run.config().n_steps,
        n_drafts: run.config().n_drafts,
        metric_direction: run.config().metric_direction,
        stats: run_stats(run),
    }
}

pub fn runs(snap: &Snapshot) -> Vec<RunSummary> {
    snap.runs.values().map(|e| run_summary(&e.run)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent_id: Option<usize>,
    pub stage: Stage,
    pub status: Status,
    pub metric: Option<f64>,
    pub exec_time: f64,
    /// Depth in the merged tree (drafts are at 1).
    pub depth: usize,
    pub children: Vec<usize>,
    /// Lines changed relative to the parent's code; `None` for drafts.
    pub modified_lines: Option<usize>,
    pub is_best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeResponse {
    pub run_id: String,
    pub llm_id: String,
    pub best_node_id: Option<usize>,
    pub max_depth: usize,
    /// Node ids with at least one child.
    pub internal_node_ids: Vec<usize>,
    pub nodes: Vec<TreeNode>,
}

pub fn tree(snap: &Snapshot, run_id: &str) -> Result<TreeResponse, AnalysisError> {
    let run = run(snap, run_id)?;
    let merged = merge_forest(run);
    let best = run_stats(run).best_node_id;
    let nodes: Vec<TreeNode> = run
        .nodes()
        .iter()
        .map(|n| {
            let slot = MergedTree::slot_of(n.id);
            TreeNode {
                id: n.id,
                parent_id: n.parent_id,
                stage: n.stage,
                status: n.status,
                metric: n.metric,
                exec_time: n.exec_time,
                depth: merged.depth(slot),
                children: merged.children(slot).iter().filter_map(|&s| MergedTree::node_of(s)).collect(),
                modified_lines: n.parent_id.map(|p| modified_line_count(&run.nodes()[p].code, &n.code)),
                is_best: best == Some(n.id),
            }
        })
        .collect();
    Ok(TreeResponse {
        run_id: run.run_id().to_string(),
        llm_id: run.llm_id().to_string(),
        best_node_id: best,
        max_depth: merged.max_depth(),
        internal_node_ids: nodes.iter().filter(|n| !n.children.is_empty()).map(|n| n.id).collect(),
        nodes,
    })
}

pub fn node(snap: &Snapshot, run_id: &str, node: usize) -> Result<NodeRecord, AnalysisError> {
    run(snap, run_id)?
        .node(node)
        .cloned()
        .ok_or_else(|| AnalysisError::UnknownNode {
            run: run_id.to_string(),
            node,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResponse {
    pub run_id: String,
    pub a: usize,
    pub b: usize,
    pub changed_lines: usize,
    pub diff: DiffResult,
}

pub fn diff(snap: &Snapshot, run_id: &str, a: usize, b: usize) -> Result<DiffResponse, AnalysisError> {
    let na = node(snap, run_id, a)?;
    let nb = node(snap, run_id, b)?;
    let diff = line_diff(&na.code, &nb.code);
    Ok(DiffResponse {
        run_id: run_id.to_string(),
        a,
        b,
        changed_lines: diff.changed_lines(),
        diff,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityResponse {
    pub run_id: String,
    pub matrix: SimilarityMatrix,
}

pub fn similarity(snap: &Snapshot, run_id: &str) -> Result<SimilarityResponse, AnalysisError> {
    let run = run(snap, run_id)?;
    Ok(SimilarityResponse {
        run_id: run_id.to_string(),
        matrix: similarity_matrix(run),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingsResponse {
    pub run_id: String,
    pub identical_siblings: Vec<IdenticalGroup>,
    pub repeated_bugs: Vec<RepeatedBug>,
}

pub fn findings(snap: &Snapshot, run_id: &str) -> Result<FindingsResponse, AnalysisError> {
    let run = run(snap, run_id)?;
    Ok(FindingsResponse {
        run_id: run_id.to_string(),
        identical_siblings: detect_identical_siblings(run),
        repeated_bugs: detect_repeated_bugs(run),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunsetSummary {
    pub llm_id: String,
    pub run_ids: Vec<String>,
    pub total_time: Option<Aggregate>,
    pub best_metric: Option<Aggregate>,
}

pub fn runsets(snap: &Snapshot) -> Vec<RunsetSummary> {
    snap.runsets
        .values()
        .map(|rs| RunsetSummary {
            llm_id: rs.llm_id().to_string(),
            run_ids: run_ids(rs),
            total_time: rs.total_time(),
            best_metric: rs.best_metric(),
        })
        .collect()
}

fn run_ids(rs: &RunSet) -> Vec<String> {
    rs.runs().iter().map(|r| r.run_id().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResponse {
    pub llm_id: String,
    pub run_ids: Vec<String>,
    pub matrix: DistanceMatrix,
}

pub fn distance(snap: &Snapshot, llm: &str) -> Result<DistanceResponse, AnalysisError> {
    let rs = runset(snap, llm)?;
    Ok(DistanceResponse {
        llm_id: llm.to_string(),
        run_ids: run_ids(rs),
        matrix: distance_matrix(rs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramResponse {
    pub llm_id: String,
    pub run_ids: Vec<String>,
    pub dendrogram: Dendrogram,
    /// Flat cluster label per run when a cluster count was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<usize>>,
}

pub fn dendrogram_from(d: &DistanceResponse, clusters: Option<usize>) -> Result<DendrogramResponse, AnalysisError> {
    let dendrogram = hierarchical_cluster(&d.matrix);
    let clusters = clusters.map(|c| flat_clusters(&dendrogram, c)).transpose()?;
    Ok(DendrogramResponse {
        llm_id: d.llm_id.clone(),
        run_ids: d.run_ids.clone(),
        dendrogram,
        clusters,
    })
}

pub fn dendrogram(snap: &Snapshot, llm: &str, clusters: Option<usize>) -> Result<DendrogramResponse, AnalysisError> {
    dendrogram_from(&distance(snap, llm)?, clusters)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResponse {
    pub llm_id: String,
    pub key: OrderKey,
    /// Run indices (into the run set's `run_ids`) in display order.
    pub order: Vec<usize>,
    pub run_ids: Vec<String>,
}

pub fn order(snap: &Snapshot, llm: &str, key: OrderKey) -> Result<OrderResponse, AnalysisError> {
    let rs = runset(snap, llm)?;
    let order = order_roots(rs, key);
    let ids = run_ids(rs);
    Ok(OrderResponse {
        llm_id: llm.to_string(),
        key,
        run_ids: order.iter().map(|&i| ids[i].clone()).collect(),
        order,
    })
}

pub fn packages(snap: &Snapshot) -> PackageUsageTable {
    let sets: Vec<RunSet> = snap.runsets.values().cloned().collect();
    package_table(&sets)
}

/// Every node of the selected runs (all runs, or one llm's), in run-id then
/// node-id order, with its code.
pub fn projection_inputs(snap: &Snapshot, llm: Option<&str>) -> Result<(Vec<PointRef>, Vec<String>), AnalysisError> {
    if let Some(l) = llm {
        runset(snap, l)?;
    }
    let mut refs = Vec::new();
    let mut codes = Vec::new();
    for e in snap.runs.values() {
        if llm.is_some_and(|l| l != e.run.llm_id()) {
            continue;
        }
        for n in e.run.nodes() {
            refs.push(PointRef {
                run_id: e.run.run_id().to_string(),
                node_id: n.id,
                llm_id: e.run.llm_id().to_string(),
            });
            codes.push(n.code.clone());
        }
    }
    Ok((refs, codes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResponse {
    pub algorithm: agentree_core::projection::Algorithm,
    pub points: Vec<ProjectionPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explained_variance_ratio: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    /// Snippets embedded by the built-in embedder after an external
    /// embedding call failed.
    pub embedding_fallbacks: usize,
}

pub fn pca_response(
    vectors: &[Vec<f64>],
    refs: &[PointRef],
    embedding_fallbacks: usize,
) -> Result<ProjectionResponse, AnalysisError> {
    let r = pca_2d(vectors).map_err(|e| AnalysisError::BadRequest(e.to_string()))?;
    Ok(ProjectionResponse {
        algorithm: agentree_core::projection::Algorithm::Pca,
        points: attach(&r.coords, refs),
        explained_variance_ratio: Some(r.explained_variance_ratio),
        kl: None,
        embedding_fallbacks,
    })
}

pub fn attach(coords: &[[f64; 2]], refs: &[PointRef]) -> Vec<ProjectionPoint> {
    coords
        .iter()
        .zip(refs)
        .map(|(c, r)| ProjectionPoint {
            x: c[0],
            y: c[1],
            run_id: r.run_id.clone(),
            node_id: r.node_id,
            llm_id: r.llm_id.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSel {
    pub run_id: String,
    pub node_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRequest {
    pub points1: Vec<NodeSel>,
    pub points2: Vec<NodeSel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub prompt: String,
    pub text: String,
    /// True when no LLM endpoint is configured; `text` is then the prompt.
    pub offline: bool,
}

pub fn comparison_request(snap: &Snapshot, req: &CompareRequest) -> Result<ComparisonRequest, AnalysisError> {
    let codes = |sel: &[NodeSel]| -> Result<Vec<String>, AnalysisError> {
        sel.iter().map(|s| node(snap, &s.run_id, s.node_id).map(|n| n.code)).collect()
    };
    ComparisonRequest::new(&codes(&req.points1)?, &codes(&req.points2)?)
        .map_err(|e| AnalysisError::BadRequest(e.to_string()))
}
