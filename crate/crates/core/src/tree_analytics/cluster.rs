//! Average-linkage agglomerative clustering.

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, DistanceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// The smaller of the two merged cluster ids.
    pub a: usize,
    pub b: usize,
    pub height: f64,
    /// Id of the new cluster: `k + merge index`.
    pub id: usize,
    /// Number of leaves in the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    /// Number of leaves.
    pub k: usize,
    pub merges: Vec<Merge>,
    /// Leaves in display order (left-to-right traversal).
    pub leaf_order: Vec<usize>,
}

/// Merges clusters in order of smallest average pairwise distance. Leaves
/// are clusters `0..k`, merge `t` creates cluster `k + t`. Ties go to the
/// pair with the smallest ids.
#[allow(clippy::needless_range_loop)]
pub fn hierarchical_cluster(d: &DistanceMatrix) -> Dendrogram {
    let k = d.k;
    if k == 0 {
        return Dendrogram {
            k,
            merges: Vec::new(),
            leaf_order: Vec::new(),
        };
    }
    // active clusters: (cluster id, size); dist indexed by active position
    let mut active: Vec<(usize, usize)> = (0..k).map(|i| (i, 1)).collect();
    let mut dist: Vec<Vec<f64>> = (0..k).map(|i| d.row(i).to_vec()).collect();
    let mut merges = Vec::with_capacity(k.saturating_sub(1));
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for p in 0..active.len() {
            for q in p + 1..active.len() {
                let (ip, iq) = (active[p].0, active[q].0);
                let key = (dist[p][q], ip.min(iq), ip.max(iq));
                let better = match best {
                    None => true,
                    Some((h, lo, hi, _, _)) => {
                        key.0 < h || (key.0 == h && (key.1, key.2) < (lo, hi))
                    }
                };
                if better {
                    best = Some((key.0, key.1, key.2, p, q));
                }
            }
        }
        let (height, lo, hi, p, q) = best.expect("two active clusters");
        let (sp, sq) = (active[p].1, active[q].1);
        let new_id = k + merges.len();
        merges.push(Merge {
            a: lo,
            b: hi,
            height,
            id: new_id,
            size: sp + sq,
        });
        // merged cluster takes position p; q is removed
        for r in 0..active.len() {
            if r == p || r == q {
                continue;
            }
            let v = (sp as f64 * dist[p][r] + sq as f64 * dist[q][r]) / (sp + sq) as f64;
            dist[p][r] = v;
            dist[r][p] = v;
        }
        active[p] = (new_id, sp + sq);
        active.remove(q);
        dist.remove(q);
        for row in &mut dist {
            row.remove(q);
        }
    }
    let leaf_order = leaf_order(k, &merges);
    Dendrogram {
        k,
        merges,
        leaf_order,
    }
}

fn leaf_order(k: usize, merges: &[Merge]) -> Vec<usize> {
    let Some(last) = merges.last() else {
        return (0..k).collect();
    };
    let mut order = Vec::with_capacity(k);
    let mut stack = vec![last.id];
    while let Some(c) = stack.pop() {
        if c < k {
            order.push(c);
        } else {
            let m = &merges[c - k];
            stack.push(m.b);
            stack.push(m.a);
        }
    }
    order
}

/// Cuts the dendrogram into exactly `count` clusters by applying its first
/// `k - count` merges. Labels are numbered by first appearance in leaf
/// index order.
pub fn flat_clusters(dend: &Dendrogram, count: usize) -> Result<Vec<usize>, AnalyticsError> {
    let k = dend.k;
    if count == 0 || count > k {
        return Err(AnalyticsError::ClusterCount { count, k });
    }
    // cluster id -> representative leaf
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut rep: Vec<usize> = (0..k).collect();
    for m in &dend.merges[..k - count] {
        let ra = find(&mut parent, rep[m.a]);
        let rb = find(&mut parent, rep[m.b]);
        let root = ra.min(rb);
        parent[ra.max(rb)] = root;
        rep.push(root);
    }
    let mut labels = vec![usize::MAX; k];
    let mut next = 0;
    let mut label_of_root = vec![usize::MAX; k];
    for (leaf, label) in labels.iter_mut().enumerate() {
        let r = find(&mut parent, leaf);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = next;
            next += 1;
        }
        *label = label_of_root[r];
    }
    Ok(labels)
}
