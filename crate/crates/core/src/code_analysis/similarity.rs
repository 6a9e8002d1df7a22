use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;

use super::normalize::{normalize, CanonicalForm};
use crate::journal::SolutionRun;

/// Which token sequences a similarity value was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityBasis {
    /// Both inputs parsed; canonical token sequences were compared.
    Canonical,
    /// At least one input failed to parse; whitespace-split raw text was
    /// compared instead.
    RawText,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Similarity {
    pub value: f64,
    pub basis: SimilarityBasis,
}

fn intern<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<T, u32> = HashMap::new();
    let mut map = |xs: &[T]| -> Vec<u32> {
        xs.iter()
            .map(|x| {
                let next = ids.len() as u32;
                *ids.entry(x.clone()).or_insert(next)
            })
            .collect()
    };
    let ia = map(a);
    let ib = map(b);
    (ia, ib)
}

/// Longest common block in `a[alo..ahi]` / `b[blo..bhi]`; among maximal
/// blocks, the one starting earliest in `a`, then earliest in `b`.
fn longest_match(
    a: &[u32],
    b2j: &HashMap<u32, Vec<usize>>,
    (alo, ahi, blo, bhi): (usize, usize, usize, usize),
    j2len: &mut Vec<usize>,
    next: &mut Vec<usize>,
) -> (usize, usize, usize) {
    let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0);
    // j2len[j + 1]: length of the match ending at a[i - 1], b[j]
    let mut touched: Vec<usize> = Vec::new();
    let mut next_touched: Vec<usize> = Vec::new();
    for (i, tok) in a.iter().enumerate().take(ahi).skip(alo) {
        if let Some(js) = b2j.get(tok) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = j2len[j] + 1;
                next[j + 1] = k;
                next_touched.push(j + 1);
                if k > bestsize {
                    besti = i + 1 - k;
                    bestj = j + 1 - k;
                    bestsize = k;
                }
            }
        }
        for &t in &touched {
            j2len[t] = 0;
        }
        std::mem::swap(j2len, next);
        std::mem::swap(&mut touched, &mut next_touched);
        next_touched.clear();
    }
    for &t in &touched {
        j2len[t] = 0;
    }
    (besti, bestj, bestsize)
}

/// Total size of the recursively found matching blocks.
fn matched_len(a: &[u32], b: &[u32]) -> usize {
    let mut b2j: HashMap<u32, Vec<usize>> = HashMap::new();
    for (j, t) in b.iter().enumerate() {
        b2j.entry(*t).or_default().push(j);
    }
    let mut j2len = vec![0; b.len() + 1];
    let mut next = vec![0; b.len() + 1];
    let mut total = 0;
    let mut queue = vec![(0, a.len(), 0, b.len())];
    while let Some(range) = queue.pop() {
        let (alo, ahi, blo, bhi) = range;
        let (i, j, k) = longest_match(a, &b2j, range, &mut j2len, &mut next);
        if k == 0 {
            continue;
        }
        total += k;
        if alo < i && blo < j {
            queue.push((alo, i, blo, j));
        }
        if i + k < ahi && j + k < bhi {
            queue.push((i + k, ahi, j + k, bhi));
        }
    }
    total
}

/// Ratcliff–Obershelp ratio `2M / (|a| + |b|)`; 1.0 for two empty inputs.
pub fn ratcliff_obershelp<T: Eq + Hash + Clone>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    if a == b {
        return 1.0;
    }
    let (ia, ib) = intern(a, b);
    2.0 * matched_len(&ia, &ib) as f64 / total as f64
}

fn raw_tokens(code: &str) -> Vec<&str> {
    code.split_whitespace().collect()
}

fn similarity_of(
    a: (&str, Option<&CanonicalForm>),
    b: (&str, Option<&CanonicalForm>),
) -> Similarity {
    match (a.1, b.1) {
        (Some(ca), Some(cb)) => Similarity {
            value: ratcliff_obershelp(&ca.tokens, &cb.tokens),
            basis: SimilarityBasis::Canonical,
        },
        _ => Similarity {
            value: ratcliff_obershelp(&raw_tokens(a.0), &raw_tokens(b.0)),
            basis: SimilarityBasis::RawText,
        },
    }
}

/// Function-level similarity of two snippets over their canonical forms.
pub fn function_similarity(a: &str, b: &str) -> Similarity {
    let ca = normalize(a).ok();
    let cb = normalize(b).ok();
    similarity_of((a, ca.as_ref()), (b, cb.as_ref()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    pub n: usize,
    /// Row-major `n * n` values.
    pub values: Vec<f64>,
    /// Per input: whether it failed to parse (its row used raw text).
    pub parse_failed: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Pairwise similarities of a list of snippets. Each snippet is normalized
/// once; cells are computed in parallel. The underlying ratio depends on
/// argument order, so both `(i, j)` and `(j, i)` hold the value computed
/// with the earlier snippet first, which keeps the matrix symmetric.
pub fn similarity_matrix_of(codes: &[&str]) -> SimilarityMatrix {
    let n = codes.len();
    let forms: Vec<Option<CanonicalForm>> = codes.par_iter().map(|c| normalize(c).ok()).collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    similarity_of((codes[i], forms[i].as_ref()), (codes[j], forms[j].as_ref()))
                        .value
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for (off, v) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = *v;
            values[j * n + i] = *v;
        }
    }
    SimilarityMatrix {
        n,
        values,
        parse_failed: forms.iter().map(Option::is_none).collect(),
    }
}

pub fn similarity_matrix(run: &SolutionRun) -> SimilarityMatrix {
    let codes: Vec<&str> = run.nodes().iter().map(|n| n.code.as_str()).collect();
    similarity_matrix_of(&codes)
}
