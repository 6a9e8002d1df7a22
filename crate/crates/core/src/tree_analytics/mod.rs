//! Process-level analytics: tree edit distance between solution-trees,
//! distance matrices, clustering and root ordering.

mod cluster;
mod ted;

pub use cluster::{flat_clusters, hierarchical_cluster, Dendrogram, Merge};
pub use ted::tree_edit_distance;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::journal::{merge_forest, MergedTree, RunSet, SolutionRun, Status};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("cluster count {count} out of range 1..={k}")]
    ClusterCount { count: usize, k: usize },
    #[error("distance matrix is not square: row {row} has {len} entries, expected {k}")]
    NotSquare { row: usize, len: usize, k: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("empty run set")]
    EmptyRunSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Root,
    Functional,
    Buggy,
}

/// Ordered rooted tree with status labels; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTree {
    labels: Vec<Label>,
    children: Vec<Vec<usize>>,
}

impl LabeledTree {
    pub const ROOT: usize = 0;

    /// The merged tree of a run, labeled by node status.
    pub fn from_run(run: &SolutionRun) -> Self {
        let tree = merge_forest(run);
        let labels = (0..tree.len())
            .map(|slot| match MergedTree::node_of(slot) {
                None => Label::Root,
                Some(id) => match run.nodes()[id].status {
                    Status::Functional => Label::Functional,
                    Status::Buggy => Label::Buggy,
                },
            })
            .collect();
        let children = (0..tree.len()).map(|s| tree.children(s).to_vec()).collect();
        LabeledTree { labels, children }
    }

    /// Builds a tree from per-node labels and parents. Node 0 must be the
    /// only parentless node and parents must precede their children.
    /// Children are ordered by index.
    pub fn from_parents(labels: Vec<Label>, parents: &[Option<usize>]) -> Result<Self, AnalyticsError> {
        let n = labels.len();
        if n == 0 || parents.len() != n {
            return Err(AnalyticsError::InvalidTree("label and parent counts differ or are zero".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            match (i, p) {
                (0, None) => {}
                (0, Some(_)) => return Err(AnalyticsError::InvalidTree("node 0 must be the root".into())),
                (_, None) => return Err(AnalyticsError::InvalidTree(format!("node {i} has no parent"))),
                (_, Some(p)) if *p >= i => {
                    return Err(AnalyticsError::InvalidTree(format!("node {i} has later parent {p}")))
                }
                (_, Some(p)) => children[*p].push(i),
            }
        }
        Ok(LabeledTree { labels, children })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, node: usize) -> Label {
        self.labels[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }
}

/// Edit distance between the merged trees of two runs.
pub fn run_distance(a: &SolutionRun, b: &SolutionRun) -> usize {
    tree_edit_distance(&LabeledTree::from_run(a), &LabeledTree::from_run(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub k: usize,
    /// Row-major `k * k` values.
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, AnalyticsError> {
        let k = rows.len();
        let mut values = Vec::with_capacity(k * k);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != k {
                return Err(AnalyticsError::NotSquare { row, len: r.len(), k });
            }
            values.extend(r);
        }
        Ok(DistanceMatrix { k, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Pairwise edit distances of a set of trees.
pub fn distance_matrix_of(trees: &[LabeledTree]) -> DistanceMatrix {
    let k = trees.len();
    let upper: Vec<Vec<usize>> = (0..k)
        .into_par_iter()
        .map(|i| (i + 1..k).map(|j| tree_edit_distance(&trees[i], &trees[j])).collect())
        .collect();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for (off, d) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            values[i * k + j] = *d as f64;
            values[j * k + i] = *d as f64;
        }
    }
    DistanceMatrix { k, values }
}

pub fn distance_matrix(runset: &RunSet) -> DistanceMatrix {
    let trees: Vec<LabeledTree> = runset.runs().iter().map(LabeledTree::from_run).collect();
    distance_matrix_of(&trees)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKey {
    TotalTime,
    BestMetric,
    NBuggy,
    NFunctional,
    TreeSimilarity,
}

impl std::str::FromStr for OrderKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "total_time" => OrderKey::TotalTime,
            "best_metric" => OrderKey::BestMetric,
            "n_buggy" => OrderKey::NBuggy,
            "n_functional" => OrderKey::NFunctional,
            "tree_similarity" => OrderKey::TreeSimilarity,
            other => return Err(format!("unknown order key {other:?}")),
        })
    }
}

/// Display order of a run set's roots. Numeric keys sort ascending and
/// stably by run index (runs without a best metric go last);
/// `tree_similarity` is the dendrogram leaf order.
pub fn order_roots(runset: &RunSet, key: OrderKey) -> Vec<usize> {
    let stats = runset.stats();
    let mut order: Vec<usize> = (0..stats.len()).collect();
    let sort_by_f64 = |order: &mut Vec<usize>, value: &dyn Fn(usize) -> Option<f64>| {
        order.sort_by(|&a, &b| match (value(a), value(b)) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
    };
    match key {
        OrderKey::TotalTime => sort_by_f64(&mut order, &|i| Some(stats[i].total_time)),
        OrderKey::BestMetric => sort_by_f64(&mut order, &|i| stats[i].best_metric),
        OrderKey::NBuggy => order.sort_by_key(|&i| stats[i].n_buggy),
        OrderKey::NFunctional => order.sort_by_key(|&i| stats[i].n_functional),
        OrderKey::TreeSimilarity => {
            return hierarchical_cluster(&distance_matrix(runset)).leaf_order;
        }
    }
    order
}
