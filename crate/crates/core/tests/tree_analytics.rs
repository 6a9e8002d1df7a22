mod common;
mod oracles;

use agentree_core::journal::group_runsets;
use agentree_core::tree_analytics::{
    distance_matrix, flat_clusters, hierarchical_cluster, order_roots, run_distance, tree_edit_distance,
    DistanceMatrix, LabeledTree, OrderKey,
};
use oracles::{random_tree, tai_distance, SplitMix};
use rayon::prelude::*;

#[test]
fn zhang_shasha_matches_exhaustive_mappings() {
    let mut rng = SplitMix(17);
    let trees: Vec<LabeledTree> = (0..200).map(|_| random_tree(&mut rng, 6)).collect();
    let mismatches: Vec<(usize, usize, usize, usize)> = (0..trees.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let trees = &trees;
            (i..trees.len()).filter_map(move |j| {
                let (fast, slow) = (tree_edit_distance(&trees[i], &trees[j]), tai_distance(&trees[i], &trees[j]));
                (fast != slow).then_some((i, j, fast, slow))
            })
        })
        .collect();
    assert!(mismatches.is_empty(), "{} mismatches, first {:?}", mismatches.len(), mismatches[0]);
}

#[test]
fn metric_properties_on_simulated_trees() {
    let trees: Vec<LabeledTree> = (0..60).map(|s| LabeledTree::from_run(&common::simulated("llm-a", s, 30))).collect();
    let mut rng = SplitMix(23);
    for _ in 0..1000 {
        let pick = |rng: &mut SplitMix| (rng.next_u64() % trees.len() as u64) as usize;
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let d = |x: usize, y: usize| tree_edit_distance(&trees[x], &trees[y]);
        assert_eq!(d(a, a), 0);
        assert_eq!(d(a, b), d(b, a));
        assert!(d(a, c) <= d(a, b) + d(b, c));
        if a != b && trees[a] != trees[b] {
            assert!(d(a, b) > 0);
        }
    }
}

#[test]
fn runset_matrix_matches_pairwise_recomputation() {
    let runs: Vec<_> = (0..5).map(|s| common::simulated("llm-a", 100 + s, 30)).collect();
    let rs = group_runsets(runs.clone()).remove(0);
    let m = distance_matrix(&rs);
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(m.get(i, j), run_distance(&runs[i], &runs[j]) as f64);
            for k in 0..5 {
                assert!(m.get(i, k) <= m.get(i, j) + m.get(j, k));
            }
        }
    }
}

fn random_metric(rng: &mut SplitMix, k: usize) -> DistanceMatrix {
    let pts: Vec<[f64; 3]> = (0..k).map(|_| [rng.next_f64(), rng.next_f64(), rng.next_f64()]).collect();
    let rows = pts
        .iter()
        .map(|p| {
            pts.iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                .collect()
        })
        .collect();
    DistanceMatrix::from_rows(rows).unwrap()
}

#[test]
fn merge_heights_match_reference_average_linkage() {
    let mut rng = SplitMix(31);
    for _ in 0..50 {
        let d = random_metric(&mut rng, 8);
        let mut condensed: Vec<f64> = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).map(|(i, j)| d.get(i, j)).collect();
        let reference = kodama::linkage(&mut condensed, 8, kodama::Method::Average);
        let mut want: Vec<f64> = reference.steps().iter().map(|s| s.dissimilarity).collect();
        let mut got: Vec<f64> = hierarchical_cluster(&d).merges.iter().map(|m| m.height).collect();
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        assert_eq!(got.len(), 7);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
        let sizes: Vec<usize> = reference.steps().iter().map(|s| s.size).collect();
        let mut ours: Vec<usize> = hierarchical_cluster(&d).merges.iter().map(|m| m.size).collect();
        let mut theirs = sizes;
        ours.sort();
        theirs.sort();
        assert_eq!(ours, theirs);
    }
}

#[test]
fn planted_groups_are_recovered() {
    let mut rng = SplitMix(41);
    for _ in 0..20 {
        let k = 10;
        let group: Vec<usize> = (0..k).map(|_| (rng.next_u64() % 2) as usize).collect();
        if group.iter().all(|&g| g == group[0]) {
            continue;
        }
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| match (i == j, group[i] == group[j]) {
                        (true, _) => 0.0,
                        (false, true) => 1.0 + rng.next_f64(),
                        (false, false) => 10.0 + rng.next_f64(),
                    })
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>();
        // symmetrize
        let rows: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| rows[i.min(j)][i.max(j)]).collect()).collect();
        let labels = flat_clusters(&hierarchical_cluster(&DistanceMatrix::from_rows(rows).unwrap()), 2).unwrap();
        for i in 0..k {
            for j in 0..k {
                assert_eq!(labels[i] == labels[j], group[i] == group[j]);
            }
        }
    }
}

#[test]
fn total_time_order_is_non_decreasing() {
    let runs: Vec<_> = (0..20).map(|s| common::simulated("llm-a", s, 30)).collect();
    let rs = group_runsets(runs).remove(0);
    let order = order_roots(&rs, OrderKey::TotalTime);
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    let totals: Vec<f64> = order.iter().map(|&i| rs.runs()[i].nodes().iter().map(|n| n.exec_time).sum()).collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{totals:?}");
}
