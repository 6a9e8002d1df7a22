//! Independent reference implementations used by the integration and
//! acceptance suites. Each one is written for clarity, not speed, and shares
//! no code with the library routine it checks.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod metamorphic;

use agentree_core::tree_analytics::{Label, LabeledTree};

/// Ratcliff–Obershelp similarity by exhaustive longest-common-block search:
/// the longest block wins, ties go to the earliest start in `a`, then in
/// `b`; recurse on both sides.
pub fn ro_ratio<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    fn matched<T: PartialEq>(a: &[T], b: &[T]) -> usize {
        let mut best = (0, 0, 0);
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut k = 0;
                while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                    k += 1;
                }
                if k > best.2 {
                    best = (i, j, k);
                }
            }
        }
        let (i, j, k) = best;
        if k == 0 {
            return 0;
        }
        k + matched(&a[..i], &b[..j]) + matched(&a[i + k..], &b[j + k..])
    }
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched(a, b) as f64 / total as f64
}

struct Flat {
    labels: Vec<Label>,
    /// Preorder index of each node and the last preorder index in its
    /// subtree; `u` is an ancestor of `v` iff `pre[u] < pre[v] <= end[u]`.
    pre: Vec<usize>,
    end: Vec<usize>,
}

fn flatten(t: &LabeledTree) -> Flat {
    let n = t.len();
    let mut pre = vec![0; n];
    let mut end = vec![0; n];
    let mut counter = 0;
    fn walk(t: &LabeledTree, v: usize, counter: &mut usize, pre: &mut [usize], end: &mut [usize]) {
        pre[v] = *counter;
        *counter += 1;
        for &c in t.children(v) {
            walk(t, c, counter, pre, end);
        }
        end[v] = *counter - 1;
    }
    walk(t, LabeledTree::ROOT, &mut counter, &mut pre, &mut end);
    Flat {
        labels: (0..n).map(|v| t.label(v)).collect(),
        pre,
        end,
    }
}

impl Flat {
    fn ancestor(&self, u: usize, v: usize) -> bool {
        self.pre[u] < self.pre[v] && self.pre[v] <= self.end[u]
    }

    fn left_of(&self, u: usize, v: usize) -> bool {
        self.pre[u] < self.pre[v] && !self.ancestor(u, v)
    }
}

/// Unit-cost tree edit distance as the cheapest Tai mapping, found by
/// enumerating every partial injection that preserves ancestry and sibling
/// order. Exponential; for trees of a handful of nodes.
pub fn tai_distance(t1: &LabeledTree, t2: &LabeledTree) -> usize {
    let (a, b) = (flatten(t1), flatten(t2));
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut best = n + m;
    let mut used = vec![false; m];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    fn consistent(a: &Flat, b: &Flat, pairs: &[(usize, usize)], u: usize, v: usize) -> bool {
        pairs.iter().all(|&(x, y)| {
            a.ancestor(x, u) == b.ancestor(y, v)
                && a.ancestor(u, x) == b.ancestor(v, y)
                && a.left_of(x, u) == b.left_of(y, v)
                && a.left_of(u, x) == b.left_of(v, y)
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        a: &Flat,
        b: &Flat,
        u: usize,
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        relabels: usize,
        best: &mut usize,
    ) {
        let (n, m) = (a.labels.len(), b.labels.len());
        if u == n {
            let k = pairs.len();
            let cost = (n - k) + (m - k) + relabels;
            *best = (*best).min(cost);
            return;
        }
        // leave u unmapped
        search(a, b, u + 1, used, pairs, relabels, best);
        for v in 0..m {
            if used[v] || !consistent(a, b, pairs, u, v) {
                continue;
            }
            used[v] = true;
            pairs.push((u, v));
            let r = relabels + usize::from(a.labels[u] != b.labels[v]);
            search(a, b, u + 1, used, pairs, r, best);
            pairs.pop();
            used[v] = false;
        }
    }

    search(&a, &b, 0, &mut used, &mut pairs, 0, &mut best);
    best
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Sample covariance (divisor n-1) of row vectors.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d = x[0].len();
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in x {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row {
            *v /= n as f64 - 1.0;
        }
    }
    c
}

/// splitmix64, reproduced in the Python freeze scripts, so fixtures can be
/// regenerated bit for bit on both sides.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Two blobs of `per_blob` points in `dim` dimensions: blob centers at
/// ±`sep` along every coordinate (scaled by 1/sqrt(dim)), noise uniform in
/// [-0.5, 0.5) per coordinate.
pub fn two_blobs(per_blob: usize, dim: usize, sep: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    let mut out = Vec::with_capacity(2 * per_blob);
    for blob in 0..2 {
        let sign = if blob == 0 { -1.0 } else { 1.0 };
        for _ in 0..per_blob {
            out.push(
                (0..dim)
                    .map(|_| sign * sep * scale + (rng.next_f64() - 0.5))
                    .collect(),
            );
        }
    }
    out
}

/// Random ordered tree of 1..=`max_nodes` nodes (root included); parents
/// precede children and non-root labels are random.
pub fn random_tree(rng: &mut SplitMix, max_nodes: usize) -> LabeledTree {
    let n = 1 + (rng.next_u64() % max_nodes as u64) as usize;
    let mut labels = vec![Label::Root];
    let mut parents = vec![None];
    for i in 1..n {
        labels.push(if rng.next_u64().is_multiple_of(2) { Label::Functional } else { Label::Buggy });
        parents.push(Some((rng.next_u64() % i as u64) as usize));
    }
    LabeledTree::from_parents(labels, &parents).expect("parents precede children")
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `n` points lying on a random affine plane in `dim` dimensions (two
/// Gram–Schmidt directions plus an offset).
pub fn planar_data(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = SplitMix(seed);
    let unit = |rng: &mut SplitMix| -> Vec<f64> { (0..dim).map(|_| rng.next_f64() - 0.5).collect() };
    let mut u = unit(&mut rng);
    let nu = dist(&u, &vec![0.0; dim]);
    u.iter_mut().for_each(|x| *x /= nu);
    let mut v = unit(&mut rng);
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(x, a)| *x -= dot * a);
    let nv = dist(&v, &vec![0.0; dim]);
    v.iter_mut().for_each(|x| *x /= nv);
    let offset: Vec<f64> = (0..dim).map(|_| rng.next_f64()).collect();
    (0..n)
        .map(|_| {
            let (a, b) = (4.0 * rng.next_f64(), rng.next_f64());
            (0..dim).map(|k| offset[k] + a * u[k] + b * v[k]).collect()
        })
        .collect()
}
