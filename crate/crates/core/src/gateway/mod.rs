//! Prompting models for stance predictions.
//!
//! [`run_batch`] renders the prompt for each record, consults the cache,
//! and otherwise calls the backend with bounded concurrency and
//! exponential-backoff retries on transient failures.

mod backend;
mod cache;
mod prompt;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    extract_content, BackendDescriptor, BackendError, BackendKind, BackendRequest, BiasedOracle,
    HttpChatBackend, OracleParams, RuleBackend, StanceBackend, ORACLE_NEUTRAL_RESPONSE,
};
pub use cache::{cache_key, now_secs, CacheEntry, PredictionCache};
pub use prompt::{build_prompt, parse_stance, PromptInstance};

use crate::corpus::StanceRecord;
use crate::stance::PredictedStance;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("cache {path}: {message}")]
    Cache { path: String, message: String },
    #[error("all {count} record(s) failed; first failure: {first}")]
    AllFailed { count: usize, first: String },
    #[error("predictions file {path}: {message}")]
    Predictions { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StancePrediction {
    pub record_id: String,
    #[serde(rename = "model")]
    pub model_id: String,
    pub raw: String,
    pub stance: PredictedStance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.initial_backoff
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl From<&BackendDescriptor> for BatchOptions {
    fn from(d: &BackendDescriptor) -> Self {
        BatchOptions {
            retry: RetryPolicy {
                max_retries: d.max_retries,
                initial_backoff: Duration::from_millis(d.backoff_ms),
            },
            max_in_flight: d.max_in_flight.max(1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    pub predictions: BTreeMap<String, StancePrediction>,
    /// Record id to the last error seen for records that never succeeded.
    pub failures: BTreeMap<String, String>,
    /// Retries spent per record, for records that needed any.
    pub retries: BTreeMap<String, u32>,
    pub backend_calls: usize,
    pub cache_hits: usize,
}

enum Resolved {
    Predicted {
        prediction: StancePrediction,
        retries: u32,
        calls: usize,
        cached: bool,
    },
    Failed {
        error: String,
        retries: u32,
        calls: usize,
    },
}

fn resolve(
    record: &StanceRecord,
    backend: &dyn StanceBackend,
    cache: &PredictionCache,
    retry: RetryPolicy,
) -> Resolved {
    let model = backend.model_id();
    let prompt = match build_prompt(&record.target, &record.text) {
        Ok(p) => p,
        Err(e) => {
            return Resolved::Failed {
                error: e.to_string(),
                retries: 0,
                calls: 0,
            }
        }
    };
    let key = cache_key(model, &prompt.rendered);
    if let Some(hit) = cache.get(&key) {
        return Resolved::Predicted {
            prediction: StancePrediction {
                record_id: record.id.clone(),
                model_id: model.to_string(),
                raw: hit.raw,
                stance: hit.stance,
            },
            retries: 0,
            calls: 0,
            cached: true,
        };
    }

    let request = BackendRequest {
        record,
        prompt: &prompt,
    };
    let mut attempt = 0u32;
    let mut calls = 0usize;
    loop {
        calls += 1;
        match backend.complete(&request) {
            Ok(raw) => {
                let stance = parse_stance(&raw);
                let entry = CacheEntry {
                    key,
                    model: model.to_string(),
                    stance,
                    raw: raw.clone(),
                    timestamp: now_secs(),
                };
                if let Err(e) = cache.insert(entry) {
                    log::warn!("could not append to cache: {e}");
                }
                return Resolved::Predicted {
                    prediction: StancePrediction {
                        record_id: record.id.clone(),
                        model_id: model.to_string(),
                        raw,
                        stance,
                    },
                    retries: attempt,
                    calls,
                    cached: false,
                };
            }
            Err(BackendError::Transient(msg)) if attempt < retry.max_retries => {
                log::debug!("record {}: {msg}; retry {}", record.id, attempt + 1);
                std::thread::sleep(retry.delay(attempt));
                attempt += 1;
            }
            Err(e) => {
                return Resolved::Failed {
                    error: e.to_string(),
                    retries: attempt,
                    calls,
                }
            }
        }
    }
}

/// Collects one prediction per record. Records that still fail after the
/// retry budget are listed in [`BatchOutcome::failures`]; the batch only
/// errors when every record failed.
pub fn run_batch(
    records: &[StanceRecord],
    backend: &dyn StanceBackend,
    cache: &PredictionCache,
    options: BatchOptions,
) -> Result<BatchOutcome, GatewayError> {
    let slots: Vec<Mutex<Option<Resolved>>> = records.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.max_in_flight.max(1).min(records.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = records.get(i) else { break };
                let resolved = resolve(record, backend, cache, options.retry);
                *slots[i].lock().expect("slot lock") = Some(resolved);
            });
        }
    });

    let mut outcome = BatchOutcome::default();
    for (record, slot) in records.iter().zip(slots) {
        match slot.into_inner().expect("slot lock").expect("every record resolved") {
            Resolved::Predicted {
                prediction,
                retries,
                calls,
                cached,
            } => {
                outcome.backend_calls += calls;
                outcome.cache_hits += usize::from(cached);
                if retries > 0 {
                    outcome.retries.insert(record.id.clone(), retries);
                }
                outcome.predictions.insert(record.id.clone(), prediction);
            }
            Resolved::Failed {
                error,
                retries,
                calls,
            } => {
                log::warn!("record {} failed: {error}", record.id);
                outcome.backend_calls += calls;
                if retries > 0 {
                    outcome.retries.insert(record.id.clone(), retries);
                }
                outcome.failures.insert(record.id.clone(), error);
            }
        }
    }
    if !records.is_empty() && outcome.predictions.is_empty() {
        let first = outcome.failures.values().next().cloned().unwrap_or_default();
        return Err(GatewayError::AllFailed {
            count: records.len(),
            first,
        });
    }
    Ok(outcome)
}

/// Writes predictions as JSONL in record-id order.
pub fn write_predictions<'a, I>(predictions: I, path: impl AsRef<Path>) -> Result<(), GatewayError>
where
    I: IntoIterator<Item = &'a StancePrediction>,
{
    let path = path.as_ref();
    let err = |e: std::io::Error| GatewayError::Predictions {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    for p in predictions {
        serde_json::to_writer(&mut w, p).map_err(|e| err(e.into()))?;
        w.write_all(b"\n").map_err(err)?;
    }
    w.flush().map_err(err)
}

pub fn read_predictions(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, StancePrediction>, GatewayError> {
    let path = path.as_ref();
    let err = |message: String| GatewayError::Predictions {
        path: path.display().to_string(),
        message,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: StancePrediction =
            serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
        out.insert(p.record_id.clone(), p);
    }
    Ok(out)
}
