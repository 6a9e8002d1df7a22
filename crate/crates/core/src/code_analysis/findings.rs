use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use super::normalize::normalize;
use crate::journal::{merge_forest, MergedTree, SolutionRun};

/// Siblings (same real parent) whose code is functionally identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdenticalGroup {
    pub parent_id: usize,
    pub node_ids: Vec<usize>,
}

/// Whether the code parsed, and the tokens it is compared by.
type TokenKey = (bool, Vec<String>);

/// Groups of two or more nodes under the same parent whose pairwise
/// similarity is 1. Drafts (children of the synthetic root) are not
/// considered.
pub fn detect_identical_siblings(run: &SolutionRun) -> Vec<IdenticalGroup> {
    let mut by_parent: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in run.nodes() {
        if let Some(p) = n.parent_id {
            by_parent.entry(p).or_default().push(n.id);
        }
    }
    let mut groups = Vec::new();
    for (parent_id, children) in by_parent {
        if children.len() < 2 {
            continue;
        }
        // similarity 1 holds exactly when the compared token sequences are
        // equal, canonical when parsable and raw text otherwise
        let mut classes: Vec<(TokenKey, Vec<usize>)> = Vec::new();
        for id in children {
            let code = &run.nodes()[id].code;
            let key = match normalize(code) {
                Ok(c) => (true, c.tokens),
                Err(_) => (false, code.split_whitespace().map(str::to_string).collect()),
            };
            match classes.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(id),
                None => classes.push((key, vec![id])),
            }
        }
        groups.extend(
            classes
                .into_iter()
                .filter(|(_, m)| m.len() >= 2)
                .map(|(_, node_ids)| IdenticalGroup { parent_id, node_ids }),
        );
    }
    groups
}

fn error_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:[A-Za-z_][A-Za-z0-9_]*\.)*[A-Za-z_][A-Za-z0-9_]*(?:Error|Exception)(?::.*)?$")
            .expect("valid regex")
    })
}

fn missing_module_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"^(?:ModuleNotFoundError|ImportError): No module named ['"]?([^'"\s]+)['"]?"#)
            .expect("valid regex")
    })
}

fn path_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?:[A-Za-z]:)?(?:[/\\][\w.\-]+)+[/\\]?"#).expect("valid regex")
    })
}

fn line_no_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bline \d+|:\d+(?::\d+)?\b").expect("valid regex"))
}

/// Signature of a failure: the first error-class line of the execution
/// output with file paths and line numbers masked. Missing-module errors
/// reduce to `ModuleNotFoundError: <module>`.
pub fn bug_signature(exec_output: &str) -> Option<String> {
    let line = exec_output
        .lines()
        .map(str::trim)
        .find(|l| error_line_re().is_match(l))?;
    if let Some(c) = missing_module_re().captures(line) {
        return Some(format!("ModuleNotFoundError: {}", &c[1]));
    }
    let masked = path_re().replace_all(line, "<path>");
    let masked = line_no_re().replace_all(&masked, |c: &regex::Captures| {
        if c[0].starts_with(':') {
            ":<n>".to_string()
        } else {
            "line <n>".to_string()
        }
    });
    Some(masked.into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    /// The same failure reappears after having occurred earlier.
    Recurrence,
    /// The failure comes back on a lineage that went through a different
    /// failure in between (A → B → A).
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepeatedBug {
    pub node_id: usize,
    pub earlier_node_id: usize,
    pub signature: String,
    pub kind: BugKind,
}

/// Buggy nodes whose signature matches an earlier buggy node of the run.
/// `earlier_node_id` is the first such node, or for a cycle the closest
/// matching ancestor.
pub fn detect_repeated_bugs(run: &SolutionRun) -> Vec<RepeatedBug> {
    let tree = merge_forest(run);
    let sigs: Vec<Option<String>> = run
        .nodes()
        .iter()
        .map(|n| if n.is_buggy() { bug_signature(&n.exec_output) } else { None })
        .collect();
    let mut first_seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (id, sig) in sigs.iter().enumerate() {
        let Some(sig) = sig.as_deref() else { continue };
        let Some(&first) = first_seen.get(sig) else {
            first_seen.insert(sig, id);
            continue;
        };
        let mut cycle_with = None;
        let mut saw_other = false;
        for slot in tree.ancestors(MergedTree::slot_of(id)) {
            let Some(anc) = MergedTree::node_of(slot) else { break };
            match sigs[anc].as_deref() {
                Some(s) if s == sig => {
                    if saw_other {
                        cycle_with = Some(anc);
                    }
                    break;
                }
                Some(_) => saw_other = true,
                None => {}
            }
        }
        out.push(match cycle_with {
            Some(anc) => RepeatedBug {
                node_id: id,
                earlier_node_id: anc,
                signature: sig.to_string(),
                kind: BugKind::Cycle,
            },
            None => RepeatedBug {
                node_id: id,
                earlier_node_id: first,
                signature: sig.to_string(),
                kind: BugKind::Recurrence,
            },
        });
    }
    out
}
