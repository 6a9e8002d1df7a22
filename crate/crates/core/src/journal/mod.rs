//! Journal data model: solution nodes, runs, the merged forest and per-run
//! statistics.
//!
//! A journal is one JSON document per run (see `schema/journal.schema.json`).
//! Everything here is immutable once constructed.

mod parse;
mod tree;

pub use parse::{parse_journal, parse_journal_report, to_journal_bytes, ParseWarning, JOURNAL_SCHEMA};
pub use tree::{merge_forest, MergedTree, Slot};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which policy operation produced a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Draft,
    Debug,
    Improve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Functional,
    Buggy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricDirection {
    LowerBetter,
    HigherBetter,
}

impl MetricDirection {
    /// True when `candidate` is strictly better than `incumbent`.
    pub fn is_better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            MetricDirection::LowerBetter => candidate < incumbent,
            MetricDirection::HigherBetter => candidate > incumbent,
        }
    }

    /// Maps a metric onto a "larger is better" score.
    pub fn score(self, metric: f64) -> f64 {
        match self {
            MetricDirection::LowerBetter => -metric,
            MetricDirection::HigherBetter => metric,
        }
    }
}

/// One solution node of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    #[serde(default)]
    pub parent_id: Option<usize>,
    pub stage: Stage,
    pub status: Status,
    pub plan: String,
    pub code: String,
    pub exec_output: String,
    #[serde(default)]
    pub metric: Option<f64>,
    #[serde(default)]
    pub exec_time: f64,
    #[serde(default)]
    pub analysis_report: String,
    pub llm_id: String,
}

impl NodeRecord {
    pub fn is_functional(&self) -> bool {
        self.status == Status::Functional
    }

    pub fn is_buggy(&self) -> bool {
        self.status == Status::Buggy
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_steps: usize,
    pub n_drafts: usize,
    pub llm_id: String,
    pub metric_direction: MetricDirection,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JournalError {
    #[error("journal is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("malformed journal document: {0}")]
    Malformed(String),
    #[error("schema violation at {pointer}{}: {message}", describe_location(.node, .field))]
    Schema {
        pointer: String,
        node: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("invalid config: n_drafts={n_drafts} must be within 1..={n_steps}")]
    Config { n_steps: usize, n_drafts: usize },
    #[error("run has {len} nodes but config.n_steps is {n_steps}")]
    TooManyNodes { len: usize, n_steps: usize },
    #[error("node id gap: expected id {expected}, found {found} (field id)")]
    IdGap { expected: usize, found: usize },
    #[error("duplicate node id {node} (field id)")]
    DuplicateId { node: usize },
    #[error("node {node}: dangling parent_id {parent} (field parent_id)")]
    DanglingParent { node: usize, parent: usize },
    #[error("node {node}: parent after child, parent_id {parent} is not earlier (field parent_id)")]
    ParentAfterChild { node: usize, parent: usize },
    #[error("node {node}: stage {stage:?} inconsistent with parent_id {parent:?} (field stage)")]
    StageParent {
        node: usize,
        stage: Stage,
        parent: Option<usize>,
    },
    #[error("node {node}: status {status:?} inconsistent with metric {metric:?} (field metric)")]
    StatusMetric {
        node: usize,
        status: Status,
        metric: Option<f64>,
    },
    #[error("node {node}: {field} must be finite and non-negative")]
    BadNumber { node: usize, field: &'static str },
}

fn describe_location(node: &Option<usize>, field: &Option<String>) -> String {
    match (node, field) {
        (Some(n), Some(f)) => format!(" (node {n}, field {f})"),
        (Some(n), None) => format!(" (node {n})"),
        (None, Some(f)) => format!(" (field {f})"),
        (None, None) => String::new(),
    }
}

/// One complete solution-seeking process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRun {
    run_id: String,
    config: RunConfig,
    nodes: Vec<NodeRecord>,
}

impl SolutionRun {
    /// Validates and builds a run. Nodes may be supplied in any order; they
    /// are stored sorted by id.
    pub fn new(
        run_id: impl Into<String>,
        config: RunConfig,
        mut nodes: Vec<NodeRecord>,
    ) -> Result<Self, JournalError> {
        if config.n_drafts == 0 || config.n_drafts > config.n_steps {
            return Err(JournalError::Config {
                n_steps: config.n_steps,
                n_drafts: config.n_drafts,
            });
        }
        if nodes.len() > config.n_steps {
            return Err(JournalError::TooManyNodes {
                len: nodes.len(),
                n_steps: config.n_steps,
            });
        }
        nodes.sort_by_key(|n| n.id);
        for (expected, node) in nodes.iter().enumerate() {
            if node.id != expected {
                if expected > 0 && node.id == nodes[expected - 1].id {
                    return Err(JournalError::DuplicateId { node: node.id });
                }
                return Err(JournalError::IdGap {
                    expected,
                    found: node.id,
                });
            }
        }
        for node in &nodes {
            validate_node(node, nodes.len())?;
        }
        Ok(SolutionRun {
            run_id: run_id.into(),
            config,
            nodes,
        })
    }

    /// Appends a node produced by the simulator, with the same checks as
    /// [`SolutionRun::new`].
    pub(crate) fn push_node(&mut self, node: NodeRecord) -> Result<(), JournalError> {
        if node.id != self.nodes.len() {
            return Err(JournalError::IdGap {
                expected: self.nodes.len(),
                found: node.id,
            });
        }
        if self.nodes.len() >= self.config.n_steps {
            return Err(JournalError::TooManyNodes {
                len: self.nodes.len() + 1,
                n_steps: self.config.n_steps,
            });
        }
        validate_node(&node, self.nodes.len() + 1)?;
        self.nodes.push(node);
        Ok(())
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&NodeRecord> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn draft_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.stage == Stage::Draft).count()
    }

    pub fn llm_id(&self) -> &str {
        &self.config.llm_id
    }
}

fn validate_node(node: &NodeRecord, len: usize) -> Result<(), JournalError> {
    let id = node.id;
    if let Some(parent) = node.parent_id {
        if parent >= len {
            return Err(JournalError::DanglingParent { node: id, parent });
        }
        if parent >= id {
            return Err(JournalError::ParentAfterChild { node: id, parent });
        }
    }
    if (node.stage == Stage::Draft) != node.parent_id.is_none() {
        return Err(JournalError::StageParent {
            node: id,
            stage: node.stage,
            parent: node.parent_id,
        });
    }
    if (node.status == Status::Functional) != node.metric.is_some() {
        return Err(JournalError::StatusMetric {
            node: id,
            status: node.status,
            metric: node.metric,
        });
    }
    if node.metric.is_some_and(|m| !m.is_finite()) {
        return Err(JournalError::BadNumber {
            node: id,
            field: "metric",
        });
    }
    if !(node.exec_time.is_finite() && node.exec_time >= 0.0) {
        return Err(JournalError::BadNumber {
            node: id,
            field: "exec_time",
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub total_time: f64,
    pub best_node_id: Option<usize>,
    pub best_metric: Option<f64>,
    pub n_functional: usize,
    pub n_buggy: usize,
}

/// Index of the best functional node; ties go to the smallest id.
pub fn best_functional<'a, I>(nodes: I, direction: MetricDirection) -> Option<(usize, f64)>
where
    I: IntoIterator<Item = &'a NodeRecord>,
{
    let mut best: Option<(usize, f64)> = None;
    for node in nodes {
        let Some(metric) = node.metric else { continue };
        best = match best {
            None => Some((node.id, metric)),
            Some((bid, bm)) => {
                if direction.is_better(metric, bm) || (metric == bm && node.id < bid) {
                    Some((node.id, metric))
                } else {
                    Some((bid, bm))
                }
            }
        };
    }
    best
}

pub fn run_stats(run: &SolutionRun) -> RunStats {
    let n_functional = run.nodes.iter().filter(|n| n.is_functional()).count();
    let best = best_functional(&run.nodes, run.config.metric_direction);
    RunStats {
        // summed in id order so the value does not depend on storage order
        total_time: run.nodes.iter().map(|n| n.exec_time).sum(),
        best_node_id: best.map(|b| b.0),
        best_metric: best.map(|b| b.1),
        n_functional,
        n_buggy: run.nodes.len() - n_functional,
    }
}

/// Count of added plus removed lines between a parent and child.
pub fn modified_line_count(parent_code: &str, child_code: &str) -> usize {
    crate::code_analysis::line_diff(parent_code, child_code).changed_lines()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Aggregate> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        (n > 0).then(|| Aggregate {
            min,
            mean: sum / n as f64,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("run {run_id} belongs to llm {found}, runset is for {expected}")]
pub struct RunSetError {
    pub run_id: String,
    pub expected: String,
    pub found: String,
}

/// The k runs produced by one LLM.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    llm_id: String,
    runs: Vec<SolutionRun>,
    stats: Vec<RunStats>,
}

impl RunSet {
    pub fn new(llm_id: impl Into<String>, runs: Vec<SolutionRun>) -> Result<Self, RunSetError> {
        let llm_id = llm_id.into();
        if let Some(bad) = runs.iter().find(|r| r.llm_id() != llm_id) {
            return Err(RunSetError {
                run_id: bad.run_id.clone(),
                expected: llm_id,
                found: bad.llm_id().to_string(),
            });
        }
        let stats = runs.iter().map(run_stats).collect();
        Ok(RunSet {
            llm_id,
            runs,
            stats,
        })
    }

    pub fn llm_id(&self) -> &str {
        &self.llm_id
    }

    pub fn runs(&self) -> &[SolutionRun] {
        &self.runs
    }

    pub fn stats(&self) -> &[RunStats] {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn total_time(&self) -> Option<Aggregate> {
        Aggregate::of(self.stats.iter().map(|s| s.total_time))
    }

    pub fn best_metric(&self) -> Option<Aggregate> {
        Aggregate::of(self.stats.iter().filter_map(|s| s.best_metric))
    }
}

/// Groups runs by LLM id, sorted by id; run order inside a group is kept.
pub fn group_runsets(runs: impl IntoIterator<Item = SolutionRun>) -> Vec<RunSet> {
    let mut groups: std::collections::BTreeMap<String, Vec<SolutionRun>> = Default::default();
    for run in runs {
        groups.entry(run.llm_id().to_string()).or_default().push(run);
    }
    groups
        .into_iter()
        .map(|(llm, runs)| RunSet::new(llm, runs).expect("grouped by llm id"))
        .collect()
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn config(n_steps: usize, n_drafts: usize, direction: MetricDirection) -> RunConfig {
        RunConfig {
            n_steps,
            n_drafts,
            llm_id: "llm-a".into(),
            metric_direction: direction,
            seed: None,
        }
    }

    /// Builds a node with the given parentage, metric and code.
    pub fn node(id: usize, parent: Option<usize>, metric: Option<f64>, code: &str) -> NodeRecord {
        NodeRecord {
            id,
            parent_id: parent,
            stage: if parent.is_none() {
                Stage::Draft
            } else if metric.is_some() {
                Stage::Improve
            } else {
                Stage::Debug
            },
            status: if metric.is_some() {
                Status::Functional
            } else {
                Status::Buggy
            },
            plan: String::new(),
            code: code.to_string(),
            exec_output: String::new(),
            metric,
            exec_time: 1.0,
            analysis_report: String::new(),
            llm_id: "llm-a".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn best_node_lower_better() {
        let mut nodes: Vec<_> = (0..23).map(|i| node(i, None, None, "")).collect();
        nodes[12] = node(12, None, Some(0.124), "");
        nodes[22] = node(22, None, Some(0.121), "");
        let run = SolutionRun::new("r", config(30, 23, MetricDirection::LowerBetter), nodes).unwrap();
        let stats = run_stats(&run);
        assert_eq!(stats.best_node_id, Some(22));
        assert_eq!(stats.best_metric, Some(0.121));
        assert_eq!(stats.n_functional, 2);
        assert_eq!(stats.n_buggy, 21);
    }

    #[test]
    fn all_buggy_run_has_no_best() {
        let nodes = vec![node(0, None, None, ""), node(1, Some(0), None, "")];
        let run = SolutionRun::new("r", config(5, 1, MetricDirection::LowerBetter), nodes).unwrap();
        let stats = run_stats(&run);
        assert_eq!(stats.best_node_id, None);
        assert_eq!(stats.best_metric, None);
        assert_eq!(stats.n_buggy, 2);
        assert_eq!(stats.total_time, 2.0);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let nodes = vec![
            node(0, None, Some(0.3), ""),
            node(1, None, Some(0.3), ""),
            node(2, Some(1), Some(0.3), ""),
        ];
        let run = SolutionRun::new("r", config(3, 2, MetricDirection::HigherBetter), nodes).unwrap();
        assert_eq!(run_stats(&run).best_node_id, Some(0));
    }

    #[test]
    fn rejects_parent_after_child() {
        let mut nodes: Vec<_> = (0..8).map(|i| node(i, None, None, "")).collect();
        nodes[3] = node(3, Some(7), None, "");
        let err = SolutionRun::new("r", config(8, 8, MetricDirection::LowerBetter), nodes).unwrap_err();
        assert_eq!(err, JournalError::ParentAfterChild { node: 3, parent: 7 });
        assert!(err.to_string().contains("parent after child"));
    }

    #[test]
    fn rejects_dangling_parent_gap_and_mismatch() {
        let nodes = vec![node(0, None, None, ""), node(1, Some(9), None, "")];
        assert!(matches!(
            SolutionRun::new("r", config(5, 1, MetricDirection::LowerBetter), nodes),
            Err(JournalError::DanglingParent { node: 1, parent: 9 })
        ));
        let nodes = vec![node(0, None, None, ""), node(2, Some(0), None, "")];
        assert!(matches!(
            SolutionRun::new("r", config(5, 1, MetricDirection::LowerBetter), nodes),
            Err(JournalError::IdGap { expected: 1, found: 2 })
        ));
        let mut bad = node(0, None, None, "");
        bad.status = Status::Functional;
        assert!(matches!(
            SolutionRun::new("r", config(5, 1, MetricDirection::LowerBetter), vec![bad]),
            Err(JournalError::StatusMetric { node: 0, .. })
        ));
        let mut bad = node(0, None, None, "");
        bad.stage = Stage::Debug;
        assert!(matches!(
            SolutionRun::new("r", config(5, 1, MetricDirection::LowerBetter), vec![bad]),
            Err(JournalError::StageParent { node: 0, .. })
        ));
        assert!(matches!(
            SolutionRun::new("r", config(2, 3, MetricDirection::LowerBetter), vec![]),
            Err(JournalError::Config { .. })
        ));
    }

    #[test]
    fn runset_aggregates() {
        let a = SolutionRun::new(
            "a",
            config(2, 1, MetricDirection::LowerBetter),
            vec![node(0, None, Some(0.5), "")],
        )
        .unwrap();
        let b = SolutionRun::new(
            "b",
            config(2, 1, MetricDirection::LowerBetter),
            vec![node(0, None, Some(0.1), ""), node(1, Some(0), None, "")],
        )
        .unwrap();
        let set = RunSet::new("llm-a", vec![a, b]).unwrap();
        let t = set.total_time().unwrap();
        assert_eq!((t.min, t.mean, t.max), (1.0, 1.5, 2.0));
        let m = set.best_metric().unwrap();
        assert_eq!((m.min, m.max), (0.1, 0.5));
        assert!(RunSet::new("other", set.runs().to_vec()).is_err());
    }

    #[test]
    fn modified_lines() {
        assert_eq!(modified_line_count("a\nb\n", "a\nb\n"), 0);
        assert_eq!(modified_line_count("a\nb\nc\n", "a\nx\nc\n"), 2);
    }
}
