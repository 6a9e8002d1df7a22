//! Run builders shared by the integration and acceptance suites.
#![allow(dead_code)]

use agentree_core::journal::{MetricDirection, NodeRecord, RunConfig, SolutionRun, Stage, Status};
use agentree_core::simulator::{simulate_run, ForceStatus, GrammarGenerator, PolicyConfig, StatusOverride};

pub fn config(n_steps: usize, n_drafts: usize, llm: &str) -> RunConfig {
    RunConfig {
        n_steps,
        n_drafts,
        llm_id: llm.into(),
        metric_direction: MetricDirection::LowerBetter,
        seed: None,
    }
}

/// A node whose stage follows from its parent's status; `metric` decides
/// its own status.
pub fn node(nodes: &[NodeRecord], parent: Option<usize>, metric: Option<f64>, code: &str) -> NodeRecord {
    let stage = match parent {
        None => Stage::Draft,
        Some(p) if nodes[p].is_buggy() => Stage::Debug,
        Some(_) => Stage::Improve,
    };
    NodeRecord {
        id: nodes.len(),
        parent_id: parent,
        stage,
        status: if metric.is_some() { Status::Functional } else { Status::Buggy },
        plan: String::new(),
        code: code.into(),
        exec_output: String::new(),
        metric,
        exec_time: 1.0,
        analysis_report: String::new(),
        llm_id: "llm-a".into(),
    }
}

pub fn run_of(nodes: Vec<NodeRecord>, n_drafts: usize) -> SolutionRun {
    let n = nodes.len().max(1);
    SolutionRun::new("fixture", config(n, n_drafts.clamp(1, n), "llm-a"), nodes).expect("valid fixture run")
}

pub fn policy(llm: &str, seed: u64, n_steps: usize) -> PolicyConfig {
    PolicyConfig {
        n_steps,
        seed,
        llm_id: llm.into(),
        ..PolicyConfig::default()
    }
}

/// A simulated run with the random-script generator.
pub fn simulated(llm: &str, seed: u64, n_steps: usize) -> SolutionRun {
    simulate_run(&policy(llm, seed, n_steps), GrammarGenerator::default()).expect("simulation succeeds")
}

/// A simulated run in which every node executes cleanly.
pub fn simulated_bug_free(seed: u64, n_steps: usize) -> SolutionRun {
    let gen = StatusOverride::new(GrammarGenerator::default(), ForceStatus::Functional);
    simulate_run(&policy("llm-a", seed, n_steps), gen).expect("simulation succeeds")
}

/// `crates/core/tests/fixtures`, from either crate's test targets.
pub fn fixtures_dir() -> std::path::PathBuf {
    let here = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    here.parent().expect("crates dir").join("core/tests/fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn json_fixture<T: serde::de::DeserializeOwned>(rel: &str) -> T {
    serde_json::from_str(&read_fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// The six cosmetic-difference pairs.
pub const COSMETIC: [&str; 6] = ["comment", "format", "print", "kwargs", "dict", "rename"];

/// The 20 metamorphic seed snippets, by file name.
pub fn seeds() -> Vec<(String, String)> {
    (1..=20)
        .map(|i| {
            let name = format!("seed_{i:02}.py");
            let code = read_fixture(&format!("seeds/{name}"));
            (name, code)
        })
        .collect()
}

/// Seed snippet `i % 20` tagged with a unique constant, so that any two
/// indices give functionally different code.
pub fn tagged_seed(i: usize) -> String {
    let mut code = read_fixture(&format!("seeds/seed_{:02}.py", i % 20 + 1));
    code.push_str(&format!("run_tag = {i}\n"));
    code
}

/// A 30-node run with distinct code everywhere except one planted group
/// of cosmetic variants under a shared parent.
pub fn planted_siblings(seed: u64) -> (SolutionRun, agentree_core::code_analysis::IdenticalGroup) {
    use crate::oracles::{metamorphic::random_variant, SplitMix};
    let mut rng = SplitMix(seed);
    let n = 30;
    let parent = 5 + (rng.next_u64() % 10) as usize;
    let size = 2 + (rng.next_u64() % 4) as usize;
    let mut members = std::collections::BTreeSet::new();
    while members.len() < size {
        members.insert(parent + 1 + (rng.next_u64() % (n - parent - 1) as u64) as usize);
    }
    let base = tagged_seed(100 + seed as usize);
    let mut nodes: Vec<NodeRecord> = Vec::new();
    for id in 0..n {
        let (parent_id, code) = if id < 5 {
            (None, tagged_seed(id))
        } else if members.contains(&id) {
            (Some(parent), random_variant(&base, &mut rng).0)
        } else {
            // keep the planted parent's other children out so the group is exact
            let mut p = (rng.next_u64() % id as u64) as usize;
            if p == parent {
                p = parent - 1;
            }
            (Some(p), tagged_seed(id))
        };
        let n = node(&nodes, parent_id, Some(0.1 + id as f64 / 1000.0), &code);
        nodes.push(n);
    }
    let group = agentree_core::code_analysis::IdenticalGroup {
        parent_id: parent,
        node_ids: members.into_iter().collect(),
    };
    (run_of(nodes, 5), group)
}

/// Three failing nodes on one lineage: A, then B, then A again.
pub fn bug_cycle() -> SolutionRun {
    let mut nodes: Vec<NodeRecord> = Vec::new();
    for (parent, err) in [(None, BUG_A), (Some(0), BUG_B), (Some(1), BUG_A)] {
        let mut n = node(&nodes, parent, None, "import pandas as pd\n");
        n.exec_output = format!(
            "Traceback (most recent call last):\n  File \"/workspace/runfile.py\", line {}, in <module>\n{err}\n",
            nodes.len() + 3
        );
        nodes.push(n);
    }
    run_of(nodes, 1)
}

pub const BUG_A: &str = "KeyError: 'SalePrice'";
pub const BUG_B: &str = "ValueError: Input contains NaN";

#[derive(serde::Deserialize)]
pub struct Snippet {
    pub llm: String,
    pub code: String,
    pub buggy: bool,
}

#[derive(serde::Deserialize, PartialEq, Debug)]
pub struct TallyCell {
    pub use_count: usize,
    pub buggy_count: usize,
}

#[derive(serde::Deserialize)]
pub struct TallyRow {
    pub package: String,
    pub cells: Vec<TallyCell>,
}

#[derive(serde::Deserialize)]
pub struct Tally {
    pub llms: Vec<String>,
    pub rows: Vec<TallyRow>,
}

/// The package corpus as one run per LLM; every snippet is a draft node.
pub fn corpus_runs(corpus: &[Snippet]) -> Vec<SolutionRun> {
    let mut llms: Vec<&str> = corpus.iter().map(|s| s.llm.as_str()).collect();
    llms.sort();
    llms.dedup();
    llms.into_iter()
        .map(|llm| {
            let mut nodes = Vec::new();
            for s in corpus.iter().filter(|s| s.llm == llm) {
                let mut n = node(&nodes, None, (!s.buggy).then_some(0.15), &s.code);
                n.llm_id = llm.into();
                nodes.push(n);
            }
            let k = nodes.len();
            SolutionRun::new(format!("{llm}-corpus"), config(k, k, llm), nodes).expect("valid corpus run")
        })
        .collect()
}

/// Compares a package table against the frozen tally; `Err` names the
/// first disagreement.
pub fn check_tally(table: &agentree_core::code_analysis::PackageUsageTable, want: &Tally) -> Result<(), String> {
    if table.llms != want.llms {
        return Err(format!("llm columns {:?} vs {:?}", table.llms, want.llms));
    }
    if table.rows.len() != want.rows.len() {
        return Err(format!("{} packages vs {}", table.rows.len(), want.rows.len()));
    }
    for (got, w) in table.rows.iter().zip(&want.rows) {
        let cells: Vec<TallyCell> = got
            .cells
            .iter()
            .map(|c| TallyCell { use_count: c.use_count, buggy_count: c.buggy_count })
            .collect();
        if got.package != w.package || cells != w.cells {
            return Err(format!("row {}: {cells:?} vs {} {:?}", got.package, w.package, w.cells));
        }
    }
    Ok(())
}
