//! The command-line front end agrees with the library it wraps.

use std::path::{Path, PathBuf};
use std::process::Command;

use agentree_core::code_analysis::{line_diff, package_table, similarity_matrix};
use agentree_core::formats::parse_matrix;
use agentree_core::journal::{group_runsets, parse_journal, SolutionRun};
use agentree_core::tree_analytics::{tree_edit_distance, LabeledTree};
use serde_json::Value;

fn agentree(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_agentree"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn simulate(dir: &Path, llm: &str, seed: u64) -> (PathBuf, SolutionRun) {
    let name = format!("{llm}-{seed}.json");
    agentree(dir, &["simulate", "--llm", llm, "--seed", &seed.to_string(), "--out", &name]);
    let path = dir.join(&name);
    let run = parse_journal(&std::fs::read(&path).unwrap()).unwrap();
    (path, run)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn matrix_commands_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (path, run) = simulate(dir.path(), "llm-a", 1);
    agentree(dir.path(), &["simmatrix", "--out", "sim.txt", path.to_str().unwrap()]);
    let written = std::fs::read_to_string(dir.path().join("sim.txt")).unwrap();
    let (n, values) = parse_matrix(&written).unwrap();
    let want = similarity_matrix(&run);
    assert_eq!(n, want.n);
    assert_eq!(bits(&values), bits(&want.values));

    agentree(dir.path(), &["ingest", "--workspace", "ws", path.to_str().unwrap()]);
    let id = run.run_id();
    agentree(
        dir.path(),
        &["export", "--workspace", "ws", "--format", "matrix", "--what", "sim", "--run", id, "--out", "e.txt"],
    );
    assert_eq!(std::fs::read_to_string(dir.path().join("e.txt")).unwrap(), written);
}

#[test]
fn treedist_and_diff_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (pa, a) = simulate(dir.path(), "llm-a", 1);
    let (pb, b) = simulate(dir.path(), "llm-a", 2);
    let printed = agentree(dir.path(), &["treedist", pa.to_str().unwrap(), pb.to_str().unwrap()]);
    let want = tree_edit_distance(&LabeledTree::from_run(&a), &LabeledTree::from_run(&b));
    assert_eq!(printed.trim().parse::<usize>().unwrap(), want);

    let diff = agentree(dir.path(), &["diff", "--a", "0", "--b", "7", pa.to_str().unwrap()]);
    let want = line_diff(&a.nodes()[0].code, &a.nodes()[7].code);
    let changed = diff.lines().filter(|l| l.starts_with('+') || l.starts_with('-')).count();
    assert_eq!(changed, want.changed_lines());
}

#[test]
fn packages_and_cluster_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let journals = dir.path().join("journals");
    std::fs::create_dir(&journals).unwrap();
    let runs: Vec<(PathBuf, SolutionRun)> = (0..4).map(|s| simulate(&journals, "llm-a", s)).collect();
    let mut args = vec!["packages", "--out", "p.json"];
    args.extend(runs.iter().map(|(p, _)| p.to_str().unwrap()));
    agentree(dir.path(), &args);
    let got: Value = serde_json::from_slice(&std::fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    let want = serde_json::to_value(package_table(&group_runsets(runs.iter().map(|(_, r)| r.clone())))).unwrap();
    assert_eq!(got, want);

    agentree(dir.path(), &["cluster", "--llm", "llm-a", "--clusters", "2", "--out", "c.json", "journals"]);
    let c: Value = serde_json::from_slice(&std::fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(c["run_ids"].as_array().unwrap().len(), 4);
    assert_eq!(c["dendrogram"]["merges"].as_array().unwrap().len(), 3);
    let labels: Vec<u64> = c["clusters"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(labels.len(), 4);
    assert!(labels.iter().all(|&l| l < 2));
}
