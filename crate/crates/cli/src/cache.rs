//! On-disk response cache for judge completions.
//!
//! Every completion is keyed by a digest of (model, prompt, image bytes,
//! vote index) — the vote index is part of the key, so five votes on one
//! detection are five distinct entries and majority voting keeps its
//! independent samples. Entries are immutable: a key is written once and
//! always returns the stored response afterwards, which is what makes
//! reruns byte-identical and lets interrupted runs resume without
//! re-spending requests.
//!
//! Writes go through a temp file persisted without clobbering, so
//! concurrent workers racing on one key leave exactly one winner; losers
//! adopt the winner's response.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use alarmsift_core::verifier::{ChatClient, VoteRequest};
use alarmsift_core::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Digest identifying one completion request.
pub fn cache_key(model: &str, prompt: &str, image_png: Option<&[u8]>, vote_index: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(image_png.unwrap_or_default());
    hasher.update([0u8]);
    hasher.update((vote_index as u64).to_le_bytes());
    hex::encode(hasher.finalize())
}

/// One stored completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub vote_index: usize,
    /// Seconds since the Unix epoch at the time the entry was stored.
    pub created_at: u64,
    pub response: String,
}

/// Wraps any client with the on-disk cache: hits never reach the inner
/// client.
pub struct CachedClient {
    inner: Box<dyn ChatClient>,
    dir: PathBuf,
}

impl CachedClient {
    /// Creates the wrapper, making sure the cache directory exists.
    pub fn new(inner: Box<dyn ChatClient>, dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            inner,
            dir: dir.to_path_buf(),
        })
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn read_entry(path: &Path) -> std::io::Result<CacheEntry> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Stores `entry` unless some other worker got there first; returns the
    /// response that ended up on disk.
    fn persist(&self, path: &Path, entry: CacheEntry) -> Result<String, Error> {
        let io_err = |source: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let json = serde_json::to_string_pretty(&entry).expect("cache entry serializes");
        let tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err)?;
        std::fs::write(tmp.path(), format!("{json}\n")).map_err(io_err)?;
        match tmp.persist_noclobber(path) {
            Ok(_) => Ok(entry.response),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => {
                // Lost the race: the first writer wins so identical keys
                // keep returning identical responses.
                Self::read_entry(path).map(|e| e.response).map_err(io_err)
            }
            Err(e) => Err(io_err(e.error)),
        }
    }
}

impl ChatClient for CachedClient {
    fn complete(&self, request: &VoteRequest<'_>) -> Result<String, Error> {
        let key = cache_key(
            request.model,
            request.prompt,
            request.image_png,
            request.vote_index,
        );
        let path = self.entry_path(&key);

        match Self::read_entry(&path) {
            Ok(entry) => return Ok(entry.response),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(_) => {
                // Corrupt entry: drop it and fall through to recompute.
                let _ = std::fs::remove_file(&path);
            }
        }

        let response = self.inner.complete(request)?;
        let entry = CacheEntry {
            key: key.clone(),
            model: request.model.to_string(),
            vote_index: request.vote_index,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            response,
        };
        self.persist(&path, entry)
    }
}
