//! Code-level analytics: line diffs, AST normalization, similarity,
//! package usage and the wasted-compute / repeated-bug detectors.

mod findings;
mod normalize;
mod packages;
pub mod python;
mod similarity;

pub use findings::{
    bug_signature, detect_identical_siblings, detect_repeated_bugs, BugKind, IdenticalGroup, RepeatedBug,
};
pub use normalize::{normalize, normalize_module, CanonicalForm};
pub use packages::{extract_packages, package_table, PackageCell, PackageRow, PackageSet, PackageUsageTable};
pub use similarity::{
    function_similarity, ratcliff_obershelp, similarity_matrix, similarity_matrix_of, Similarity,
    SimilarityBasis, SimilarityMatrix,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffTag {
    Shared,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub line: String,
    pub tag: DiffTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiffResult {
    pub lines: Vec<DiffLine>,
}

impl DiffResult {
    /// Added plus removed lines.
    pub fn changed_lines(&self) -> usize {
        self.lines.iter().filter(|l| l.tag != DiffTag::Shared).count()
    }

    pub fn count(&self, tag: DiffTag) -> usize {
        self.lines.iter().filter(|l| l.tag == tag).count()
    }

    /// Lines of the first input (everything except additions).
    pub fn old_lines(&self) -> Vec<&str> {
        self.side(DiffTag::Added)
    }

    /// Lines of the second input (everything except removals).
    pub fn new_lines(&self) -> Vec<&str> {
        self.side(DiffTag::Removed)
    }

    fn side(&self, skip: DiffTag) -> Vec<&str> {
        self.lines
            .iter()
            .filter(|l| l.tag != skip)
            .map(|l| l.line.as_str())
            .collect()
    }
}

pub(crate) fn split_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

/// Longest-common-subsequence diff over lines. Within a changed region
/// removals are listed before additions.
pub fn line_diff(a: &str, b: &str) -> DiffResult {
    let a = split_lines(a);
    let b = split_lines(b);
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let am = &a[prefix..a.len() - suffix];
    let bm = &b[prefix..b.len() - suffix];

    // lcs[i][j] = LCS length of am[i..] and bm[j..]
    let (n, m) = (am.len(), bm.len());
    let width = m + 1;
    let mut lcs = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * width + j] = if am[i] == bm[j] {
                lcs[(i + 1) * width + j + 1] + 1
            } else {
                lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
            };
        }
    }

    let mut lines = Vec::with_capacity(a.len() + b.len());
    let push = |lines: &mut Vec<DiffLine>, line: &str, tag| {
        lines.push(DiffLine {
            line: line.to_string(),
            tag,
        })
    };
    for l in &a[..prefix] {
        push(&mut lines, l, DiffTag::Shared);
    }
    let (mut i, mut j) = (0, 0);
    let mut added = Vec::new();
    while i < n || j < m {
        if i < n && j < m && am[i] == bm[j] {
            for l in added.drain(..) {
                push(&mut lines, l, DiffTag::Added);
            }
            push(&mut lines, am[i], DiffTag::Shared);
            i += 1;
            j += 1;
        } else if j >= m || (i < n && lcs[(i + 1) * width + j] >= lcs[i * width + j + 1]) {
            push(&mut lines, am[i], DiffTag::Removed);
            i += 1;
        } else {
            added.push(bm[j]);
            j += 1;
        }
    }
    for l in added {
        push(&mut lines, l, DiffTag::Added);
    }
    for l in &a[a.len() - suffix..] {
        push(&mut lines, l, DiffTag::Shared);
    }
    DiffResult { lines }
}
