mod common;
mod oracles;

use agentree_core::code_analysis::{detect_identical_siblings, detect_repeated_bugs, BugKind};

#[test]
fn planted_identical_groups_are_recovered_exactly() {
    for seed in 0..20 {
        let (run, group) = common::planted_siblings(seed);
        assert_eq!(detect_identical_siblings(&run), vec![group], "fixture {seed}");
    }
}

#[test]
fn distinct_code_has_no_identical_siblings() {
    let mut nodes = Vec::new();
    for id in 0..12 {
        let parent = if id < 3 { None } else { Some(id % 3) };
        let n = common::node(&nodes, parent, Some(0.2), &common::tagged_seed(id));
        nodes.push(n);
    }
    assert!(detect_identical_siblings(&common::run_of(nodes, 3)).is_empty());
}

#[test]
fn planted_bug_cycle_is_reported() {
    let found = detect_repeated_bugs(&common::bug_cycle());
    assert_eq!(found.len(), 1, "{found:?}");
    assert_eq!((found[0].node_id, found[0].earlier_node_id), (2, 0));
    assert_eq!(found[0].kind, BugKind::Cycle);
    assert_eq!(found[0].signature, common::BUG_A);
}

#[test]
fn bug_free_runs_report_nothing() {
    for seed in 0..50 {
        let run = common::simulated_bug_free(seed, 30);
        assert!(run.nodes().iter().all(|n| n.is_functional()));
        assert!(detect_repeated_bugs(&run).is_empty(), "seed {seed}");
    }
}
