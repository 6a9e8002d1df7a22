//! On-disk workspace: `journals/<run_id>.json` plus a `cache/` directory of
//! derived artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use agentree_core::journal::{group_runsets, parse_journal, JournalError, RunSet, SolutionRun};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{0}")]
    Journal(#[from] JournalError),
    #[error("run id {0:?} cannot be used as a file name (allowed: letters, digits, '.', '_', '-'; max 128)")]
    RunId(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn valid_run_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[derive(Debug)]
pub struct Entry {
    pub run: SolutionRun,
    /// SHA-256 of the journal bytes as stored.
    pub hash: String,
}

/// An immutable view of the workspace's journals.
#[derive(Debug, Default)]
pub struct Snapshot {
    pub runs: BTreeMap<String, Arc<Entry>>,
    /// Run sets by llm id, runs in run-id order.
    pub runsets: BTreeMap<String, RunSet>,
}

impl Snapshot {
    fn build(runs: BTreeMap<String, Arc<Entry>>) -> Self {
        let runsets = group_runsets(runs.values().map(|e| e.run.clone()))
            .into_iter()
            .map(|rs| (rs.llm_id().to_string(), rs))
            .collect();
        Snapshot { runs, runsets }
    }

    pub fn run(&self, id: &str) -> Option<&Arc<Entry>> {
        self.runs.get(id)
    }

    /// Hash over the hashes of the runs in a run set, in order.
    pub fn runset_hash(&self, llm: &str) -> Option<String> {
        let rs = self.runsets.get(llm)?;
        let joined: Vec<&str> = rs
            .runs()
            .iter()
            .map(|r| self.runs[r.run_id()].hash.as_str())
            .collect();
        Some(sha256_hex(joined.join(",").as_bytes()))
    }

    /// Hash over every journal in the workspace.
    pub fn all_hash(&self) -> String {
        let joined: Vec<String> = self.runs.iter().map(|(id, e)| format!("{id}:{}", e.hash)).collect();
        sha256_hex(joined.join(",").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestStatus {
    Added,
    Unchanged,
    Replaced,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct IngestOutcome {
    pub run_id: String,
    pub status: IngestStatus,
}

#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    state: RwLock<Arc<Snapshot>>,
}

impl Workspace {
    /// Opens (creating if needed) a workspace and loads its journals.
    /// Unreadable journals are skipped with a warning.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, WorkspaceError> {
        let root = root.into();
        let journals = root.join("journals");
        std::fs::create_dir_all(&journals).map_err(io_err(&journals))?;
        let cache = root.join("cache");
        std::fs::create_dir_all(&cache).map_err(io_err(&cache))?;
        let mut runs = BTreeMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&journals)
            .map_err(io_err(&journals))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            match parse_journal(&bytes) {
                Ok(run) => {
                    let expected = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                    if run.run_id() != expected {
                        tracing::warn!(path = %path.display(), run_id = run.run_id(), "journal file name does not match its run id; skipped");
                        continue;
                    }
                    let hash = sha256_hex(&bytes);
                    runs.insert(run.run_id().to_string(), Arc::new(Entry { run, hash }));
                }
                Err(e) => tracing::warn!(path = %path.display(), "skipping journal: {e}"),
            }
        }
        Ok(Workspace {
            root,
            state: RwLock::new(Arc::new(Snapshot::build(runs))),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.state.read().expect("workspace lock").clone()
    }

    /// Validates and stores a journal. Re-ingesting identical bytes is a
    /// no-op; different bytes under an existing run id replace it.
    pub fn ingest_bytes(&self, bytes: &[u8]) -> Result<IngestOutcome, WorkspaceError> {
        let run = parse_journal(bytes)?;
        let run_id = run.run_id().to_string();
        if !valid_run_id(&run_id) {
            return Err(WorkspaceError::RunId(run_id));
        }
        let hash = sha256_hex(bytes);
        let mut state = self.state.write().expect("workspace lock");
        let status = match state.runs.get(&run_id) {
            Some(e) if e.hash == hash => {
                return Ok(IngestOutcome {
                    run_id,
                    status: IngestStatus::Unchanged,
                })
            }
            Some(_) => IngestStatus::Replaced,
            None => IngestStatus::Added,
        };
        let path = self.root.join("journals").join(format!("{run_id}.json"));
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        let mut runs = state.runs.clone();
        runs.insert(run_id.clone(), Arc::new(Entry { run, hash }));
        *state = Arc::new(Snapshot::build(runs));
        Ok(IngestOutcome { run_id, status })
    }

    pub fn ingest_path(&self, path: &Path) -> Result<IngestOutcome, WorkspaceError> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        self.ingest_bytes(&bytes)
    }
}
