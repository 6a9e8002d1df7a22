use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::Value;

use super::{JournalError, NodeRecord, RunConfig, SolutionRun};

/// The journal schema shipped with the crate.
pub const JOURNAL_SCHEMA: &str = include_str!("../../schema/journal.schema.json");

fn validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value = serde_json::from_str(JOURNAL_SCHEMA).expect("bundled schema is JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

/// Non-fatal findings while parsing a journal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// The node has no `exec_time`; it is treated as 0 seconds.
    MissingExecTime { node: usize },
}

impl std::fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseWarning::MissingExecTime { node } => {
                write!(f, "node {node}: missing exec_time, treated as 0")
            }
        }
    }
}

#[derive(Deserialize)]
struct RawJournal {
    run_id: String,
    config: RunConfig,
    nodes: Vec<NodeRecord>,
}

/// Parses and validates a journal document.
pub fn parse_journal(bytes: &[u8]) -> Result<SolutionRun, JournalError> {
    let (run, warnings) = parse_journal_report(bytes)?;
    for w in &warnings {
        tracing::warn!(run_id = run.run_id(), "{w}");
    }
    Ok(run)
}

/// Like [`parse_journal`] but hands the warnings back to the caller.
pub fn parse_journal_report(bytes: &[u8]) -> Result<(SolutionRun, Vec<ParseWarning>), JournalError> {
    let text = std::str::from_utf8(bytes).map_err(|e| JournalError::Encoding(e.to_string()))?;
    let doc: Value = serde_json::from_str(text).map_err(|e| JournalError::Malformed(e.to_string()))?;

    if let Some(err) = validator().iter_errors(&doc).next() {
        let pointer = err.instance_path().to_string();
        let (node, field) = locate(&doc, &pointer);
        return Err(JournalError::Schema {
            pointer,
            node,
            field,
            message: err.to_string(),
        });
    }

    let warnings = doc["nodes"]
        .as_array()
        .map(|nodes| {
            nodes
                .iter()
                .filter(|n| n.get("exec_time").is_none())
                .filter_map(|n| n["id"].as_u64())
                .map(|id| ParseWarning::MissingExecTime { node: id as usize })
                .collect()
        })
        .unwrap_or_default();

    let raw: RawJournal = serde_json::from_value(doc).map_err(|e| JournalError::Malformed(e.to_string()))?;
    let run = SolutionRun::new(raw.run_id, raw.config, raw.nodes)?;
    Ok((run, warnings))
}

/// Resolves a JSON pointer like `/nodes/3/status` to (node id, field).
fn locate(doc: &Value, pointer: &str) -> (Option<usize>, Option<String>) {
    let mut parts = pointer.trim_start_matches('/').split('/');
    match (parts.next(), parts.next(), parts.next()) {
        (Some("nodes"), Some(idx), field) => {
            let node = idx.parse::<usize>().ok().map(|i| {
                doc["nodes"][i]["id"]
                    .as_u64()
                    .map(|id| id as usize)
                    .unwrap_or(i)
            });
            (node, field.map(str::to_string))
        }
        (Some("config"), field, _) => (None, field.map(|f| format!("config.{f}"))),
        (Some(""), None, _) | (None, ..) => (None, None),
        (Some(field), ..) => (None, Some(field.to_string())),
    }
}

/// Canonical serialization: pretty JSON, nodes in id order, trailing newline.
pub fn to_journal_bytes(run: &SolutionRun) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(run).expect("journal serializes");
    out.push(b'\n');
    out
}
