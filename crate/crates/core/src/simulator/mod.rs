//! The draft / debug / improve coding policy, driven by a seeded RNG and a
//! pluggable code generator in place of an LLM.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(cfg.seed)`, which is specified independently of platform,
//! so a seed reproduces the same journal everywhere.

mod generators;

pub use generators::{FixtureEntry, FixtureGenerator, ForceStatus, GrammarGenerator, StatusOverride};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::{
    best_functional, merge_forest, JournalError, MetricDirection, NodeRecord, RunConfig, SolutionRun, Stage,
    Status,
};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImproveRule {
    Greedy,
    Softmax,
}

impl std::str::FromStr for ImproveRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(ImproveRule::Greedy),
            "softmax" => Ok(ImproveRule::Softmax),
            other => Err(format!("unknown improve rule {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub n_steps: usize,
    pub n_drafts: usize,
    /// Probability of attempting a debug (rather than improve) step once
    /// all drafts exist.
    pub p_debug: f64,
    /// Deepest merged-tree depth a debug target may have (drafts are at
    /// depth 1).
    pub debug_max_depth: usize,
    pub improve_rule: ImproveRule,
    pub softmax_temperature: f64,
    pub seed: u64,
    pub metric_direction: MetricDirection,
    pub llm_id: String,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            n_steps: 30,
            n_drafts: 5,
            p_debug: 0.5,
            debug_max_depth: 3,
            improve_rule: ImproveRule::Greedy,
            softmax_temperature: 1.0,
            seed: 0,
            metric_direction: MetricDirection::LowerBetter,
            llm_id: "sim".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid policy config: {0}")]
    Config(String),
    #[error("no functional node to improve")]
    NoFunctionalNode,
    #[error("softmax temperature must be positive and finite, got {0}")]
    Temperature(f64),
    #[error("generator failed at step {step}: {message}")]
    Generator { step: usize, message: String },
    #[error("generated node {step} is invalid: {source}")]
    InvalidNode { step: usize, source: JournalError },
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_drafts == 0 || self.n_drafts > self.n_steps {
            return Err(SimError::Config(format!(
                "n_drafts={} must be within 1..={}",
                self.n_drafts, self.n_steps
            )));
        }
        if !(0.0..=1.0).contains(&self.p_debug) {
            return Err(SimError::Config(format!("p_debug={} outside [0, 1]", self.p_debug)));
        }
        if self.debug_max_depth == 0 {
            return Err(SimError::Config("debug_max_depth must be at least 1".into()));
        }
        if !(self.softmax_temperature > 0.0 && self.softmax_temperature.is_finite()) {
            return Err(SimError::Temperature(self.softmax_temperature));
        }
        Ok(())
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            n_steps: self.n_steps,
            n_drafts: self.n_drafts,
            llm_id: self.llm_id.clone(),
            metric_direction: self.metric_direction,
            seed: Some(self.seed),
        }
    }

    /// Run id used for simulated journals.
    pub fn run_id(&self) -> String {
        format!("{}-seed{}", self.llm_id, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "target", rename_all = "snake_case")]
pub enum PolicyAction {
    Draft,
    Debug(usize),
    Improve(usize),
    Terminate,
}

/// The best functional node; ties go to the smallest id.
pub fn select_improve_greedy(run: &SolutionRun) -> Result<usize, SimError> {
    best_functional(run.nodes(), run.config().metric_direction)
        .map(|(id, _)| id)
        .ok_or(SimError::NoFunctionalNode)
}

/// Selection probabilities `∝ exp(s_i / T)` over functional nodes, where
/// `s_i` is the metric for higher-is-better runs and its negation
/// otherwise.
pub fn softmax_probabilities(run: &SolutionRun, temperature: f64) -> Result<Vec<(usize, f64)>, SimError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(SimError::Temperature(temperature));
    }
    let direction = run.config().metric_direction;
    let scored: Vec<(usize, f64)> = run
        .nodes()
        .iter()
        .filter_map(|n| n.metric.map(|m| (n.id, direction.score(m))))
        .collect();
    if scored.is_empty() {
        return Err(SimError::NoFunctionalNode);
    }
    let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scored.iter().map(|(_, s)| ((s - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(scored
        .iter()
        .zip(weights)
        .map(|((id, _), w)| (*id, w / total))
        .collect())
}

pub fn select_improve_softmax(run: &SolutionRun, temperature: f64, rng: &mut SimRng) -> Result<usize, SimError> {
    let probs = softmax_probabilities(run, temperature)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (id, p) in &probs {
        acc += p;
        if u < acc {
            return Ok(*id);
        }
    }
    // rounding left `acc` just below 1
    Ok(probs.iter().rev().find(|(_, p)| *p > 0.0).expect("some mass").0)
}

/// Buggy leaves of the merged tree at depth ≤ `max_depth`, in id order.
pub fn debuggable_nodes(run: &SolutionRun, max_depth: usize) -> Vec<usize> {
    let tree = merge_forest(run);
    run.nodes()
        .iter()
        .filter(|n| n.is_buggy())
        .map(|n| n.id)
        .filter(|&id| {
            let slot = crate::journal::MergedTree::slot_of(id);
            tree.is_leaf(slot) && tree.depth(slot) <= max_depth
        })
        .collect()
}

/// One policy decision.
pub fn next_action(run: &SolutionRun, cfg: &PolicyConfig, rng: &mut SimRng) -> PolicyAction {
    if run.len() >= cfg.n_steps {
        return PolicyAction::Terminate;
    }
    if run.draft_count() < cfg.n_drafts {
        return PolicyAction::Draft;
    }
    if rng.random::<f64>() < cfg.p_debug {
        let candidates = debuggable_nodes(run, cfg.debug_max_depth);
        if !candidates.is_empty() {
            let pick = rng.random_range(0..candidates.len());
            return PolicyAction::Debug(candidates[pick]);
        }
    }
    let target = match cfg.improve_rule {
        ImproveRule::Greedy => select_improve_greedy(run),
        ImproveRule::Softmax => select_improve_softmax(run, cfg.softmax_temperature, rng),
    };
    match target {
        Ok(id) => PolicyAction::Improve(id),
        Err(_) => PolicyAction::Draft,
    }
}

/// What a generator produced for one step. A present metric means the code
/// ran (functional); no metric means it failed (buggy).
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub plan: String,
    pub code: String,
    pub exec_output: String,
    pub metric: Option<f64>,
    pub exec_time: f64,
    pub analysis_report: String,
}

pub struct GenContext<'a> {
    pub step: usize,
    pub action: PolicyAction,
    /// The node being debugged or improved.
    pub target: Option<&'a NodeRecord>,
    pub run: &'a SolutionRun,
}

/// Stand-in for the coding LLM. Implementations must be deterministic given
/// the RNG state.
pub trait CodeGenerator {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String>;
}

impl<G: CodeGenerator + ?Sized> CodeGenerator for &mut G {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String> {
        (**self).generate(ctx, rng)
    }
}

impl<G: CodeGenerator + ?Sized> CodeGenerator for Box<G> {
    fn generate(&mut self, ctx: &GenContext<'_>, rng: &mut SimRng) -> Result<Generated, String> {
        (**self).generate(ctx, rng)
    }
}

/// Runs the policy for `cfg.n_steps` steps.
pub fn simulate_run(cfg: &PolicyConfig, mut gen: impl CodeGenerator) -> Result<SolutionRun, SimError> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut run = SolutionRun::new(cfg.run_id(), cfg.run_config(), Vec::new())
        .map_err(|e| SimError::Config(e.to_string()))?;
    loop {
        let action = next_action(&run, cfg, &mut rng);
        let (stage, parent) = match action {
            PolicyAction::Terminate => break,
            PolicyAction::Draft => (Stage::Draft, None),
            PolicyAction::Debug(t) => (Stage::Debug, Some(t)),
            PolicyAction::Improve(t) => (Stage::Improve, Some(t)),
        };
        let step = run.len();
        let out = {
            let ctx = GenContext {
                step,
                action,
                target: parent.and_then(|p| run.node(p)),
                run: &run,
            };
            gen.generate(&ctx, &mut rng)
                .map_err(|message| SimError::Generator { step, message })?
        };
        let node = NodeRecord {
            id: step,
            parent_id: parent,
            stage,
            status: if out.metric.is_some() {
                Status::Functional
            } else {
                Status::Buggy
            },
            plan: out.plan,
            code: out.code,
            exec_output: out.exec_output,
            metric: out.metric,
            exec_time: out.exec_time,
            analysis_report: out.analysis_report,
            llm_id: cfg.llm_id.clone(),
        };
        run.push_node(node)
            .map_err(|source| SimError::InvalidNode { step, source })?;
    }
    Ok(run)
}
