//! Content-addressed artifact cache with single-flight computation.
//!
//! Keys are SHA-256 digests of the artifact kind, its parameters and the
//! hashes of the journals it derives from, so a changed journal simply
//! yields a new key. Entries live in memory and in `cache/<key>.json`; a
//! missing or corrupt file is recomputed.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde_json::Value;
use tokio::sync::OnceCell;

use crate::workspace::sha256_hex;

pub fn cache_key(kind: &str, params: &str, inputs: &str) -> String {
    sha256_hex(format!("{kind}\n{params}\n{inputs}").as_bytes())
}

#[derive(Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
    cells: Mutex<HashMap<String, Arc<OnceCell<Arc<Value>>>>>,
    computations: AtomicUsize,
}

impl Cache {
    /// `dir = None` keeps the cache in memory only.
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache {
            dir,
            cells: Mutex::new(HashMap::new()),
            computations: AtomicUsize::new(0),
        }
    }

    /// How many times a value was actually computed (not loaded).
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::SeqCst)
    }

    fn cell(&self, key: &str) -> Arc<OnceCell<Arc<Value>>> {
        self.cells
            .lock()
            .expect("cache lock")
            .entry(key.to_string())
            .or_default()
            .clone()
    }

    /// Value already available for `key`, from memory or disk.
    pub fn peek(&self, key: &str) -> Option<Arc<Value>> {
        if let Some(v) = self.cell(key).get() {
            return Some(v.clone());
        }
        let v = Arc::new(self.load(key)?);
        let cell = self.cell(key);
        let _ = cell.set(v.clone());
        Some(cell.get().cloned().unwrap_or(v))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn load(&self, key: &str) -> Option<Value> {
        let path = self.path(key)?;
        let bytes = std::fs::read(&path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                tracing::warn!(path = %path.display(), "corrupt cache entry, recomputing: {e}");
                None
            }
        }
    }

    /// Stores a value computed elsewhere (for example by a background job).
    pub fn insert(&self, key: &str, value: Value) -> Arc<Value> {
        let v = Arc::new(value);
        self.persist(key, &v);
        let cell = self.cell(key);
        let _ = cell.set(v.clone());
        cell.get().cloned().unwrap_or(v)
    }

    fn persist(&self, key: &str, v: &Value) {
        let Some(path) = self.path(key) else { return };
        let tmp = path.with_extension("json.tmp");
        let result = serde_json::to_vec(v)
            .map_err(std::io::Error::other)
            .and_then(|bytes| std::fs::write(&tmp, bytes))
            .and_then(|_| std::fs::rename(&tmp, &path));
        if let Err(e) = result {
            tracing::warn!(path = %path.display(), "could not write cache entry: {e}");
        }
    }

    /// Returns the cached value or computes it on a blocking thread.
    /// Concurrent callers with the same key share one computation; a failed
    /// computation is not cached.
    pub async fn get_or_compute<F, E>(&self, key: &str, compute: F) -> Result<Arc<Value>, E>
    where
        F: FnOnce() -> Result<Value, E> + Send + 'static,
        E: Send + 'static + From<tokio::task::JoinError>,
    {
        let cell = self.cell(key);
        cell.get_or_try_init(|| async {
            if let Some(v) = self.load(key) {
                return Ok(Arc::new(v));
            }
            self.computations.fetch_add(1, Ordering::SeqCst);
            let v = tokio::task::spawn_blocking(compute).await??;
            self.persist(key, &v);
            Ok(Arc::new(v))
        })
        .await
        .cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Failed;

    impl From<tokio::task::JoinError> for Failed {
        fn from(_: tokio::task::JoinError) -> Self {
            Failed
        }
    }

    #[tokio::test]
    async fn single_flight() {
        let cache = Arc::new(Cache::new(None));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let cache = cache.clone();
            handles.push(tokio::spawn(async move {
                cache
                    .get_or_compute("k", || {
                        std::thread::sleep(std::time::Duration::from_millis(50));
                        Ok::<_, Failed>(Value::from(7))
                    })
                    .await
                    .unwrap()
            }));
        }
        for h in handles {
            assert_eq!(*h.await.unwrap(), Value::from(7));
        }
        assert_eq!(cache.computations(), 1);
    }

    #[tokio::test]
    async fn failures_are_retried_and_corrupt_files_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path().to_path_buf()));
        assert!(cache.get_or_compute("k", || Err::<Value, _>(Failed)).await.is_err());
        let v = cache.get_or_compute("k", || Ok::<_, Failed>(Value::from(1))).await.unwrap();
        assert_eq!(*v, Value::from(1));

        std::fs::write(dir.path().join("other.json"), b"{not json").unwrap();
        let fresh = Cache::new(Some(dir.path().to_path_buf()));
        let v = fresh.get_or_compute("other", || Ok::<_, Failed>(Value::from(2))).await.unwrap();
        assert_eq!(*v, Value::from(2));
        // a restarted cache loads the persisted entry without recomputing
        let again = Cache::new(Some(dir.path().to_path_buf()));
        let v = again.get_or_compute("k", || Ok::<_, Failed>(Value::from(99))).await.unwrap();
        assert_eq!(*v, Value::from(1));
        assert_eq!(again.computations(), 0);
    }
}
