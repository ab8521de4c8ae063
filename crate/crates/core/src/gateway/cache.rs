//! Append-only JSONL response cache keyed by `digest(model, prompt)`.
//!
//! Later lines win over earlier lines with the same key. A final line
//! without a trailing newline is a torn write and is ignored; any other
//! unreadable line is corruption.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GatewayError;
use crate::stance::PredictedStance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model: String,
    pub stance: PredictedStance,
    pub raw: String,
    pub timestamp: u64,
}

pub fn cache_key(model_id: &str, rendered_prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update((model_id.len() as u64).to_le_bytes());
    h.update(model_id.as_bytes());
    h.update(rendered_prompt.as_bytes());
    hex::encode(h.finalize())
}

pub fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct PredictionCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<String, CacheEntry>>,
    writer: Option<Mutex<BufWriter<File>>>,
}

impl PredictionCache {
    /// A cache that lives only as long as the process.
    pub fn in_memory() -> Self {
        PredictionCache {
            path: None,
            entries: Mutex::new(HashMap::new()),
            writer: None,
        }
    }

    /// Opens (creating if needed) a cache file and loads its entries.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |e: std::io::Error| GatewayError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut entries = HashMap::new();
        if path.exists() {
            let mut content = String::new();
            File::open(&path)
                .and_then(|mut f| f.read_to_string(&mut content))
                .map_err(io_err)?;
            let complete = content.ends_with('\n');
            let lines: Vec<&str> = content.lines().collect();
            let mut torn = false;
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(line) {
                    Ok(entry) => {
                        entries.insert(entry.key.clone(), entry);
                    }
                    Err(_) if i + 1 == lines.len() && !complete => {
                        torn = true;
                        log::warn!("ignoring torn final line in cache {}", path.display());
                    }
                    Err(e) => {
                        return Err(GatewayError::Cache {
                            path: path.display().to_string(),
                            message: format!("line {} is corrupt ({e}); rebuild the cache", i + 1),
                        })
                    }
                }
            }
            if torn {
                // Cut the torn line so the next append starts on a fresh line.
                let keep = content.rfind('\n').map_or(0, |i| i + 1);
                OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .and_then(|f| f.set_len(keep as u64))
                    .map_err(io_err)?;
            } else if !complete && !content.is_empty() {
                OpenOptions::new()
                    .append(true)
                    .open(&path)
                    .and_then(|mut f| f.write_all(b"\n"))
                    .map_err(io_err)?;
            }
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        Ok(PredictionCache {
            path: Some(path),
            entries: Mutex::new(entries),
            writer: Some(Mutex::new(BufWriter::new(file))),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an entry and appends it to the backing file, if any.
    pub fn insert(&self, entry: CacheEntry) -> Result<(), GatewayError> {
        if let Some(writer) = &self.writer {
            let line = serde_json::to_string(&entry).expect("cache entry serializes");
            let mut w = writer.lock().expect("cache writer lock");
            w.write_all(line.as_bytes())
                .and_then(|_| w.write_all(b"\n"))
                .and_then(|_| w.flush())
                .map_err(|e| GatewayError::Cache {
                    path: self
                        .path
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    message: e.to_string(),
                })?;
        }
        self.entries
            .lock()
            .expect("cache lock")
            .insert(entry.key.clone(), entry);
        Ok(())
    }
}
