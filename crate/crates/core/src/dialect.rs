//! Dialect proportions over four English varieties.
//!
//! A word-probability table gives `p(w | k)` for each variety `k`. A text's
//! mixture proportions `theta` are fit by EM on the mixed-membership
//! likelihood `prod_t sum_k theta_k p(w_t | k)`, and the text is labeled
//! with the variety of highest proportion.
//!
//! The variety labels are linguistic group markers. Not every speaker of a
//! demographic group uses the associated variety, so the label says nothing
//! about an author's identity.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

pub const CATEGORIES: usize = 4;

/// Add-alpha smoothing applied to raw table counts.
pub const SMOOTHING_ALPHA: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DialectError {
    #[error("failed to read dialect table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected a token and {CATEGORIES} weights, found {found} weight column(s)")]
    Schema { line: usize, found: usize },
    #[error("dialect table has an empty vocabulary")]
    EmptyVocabulary,
    #[error("unknown dialect label {0:?}")]
    UnknownLabel(String),
}

/// Variety order used for table columns, `theta` and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variety {
    AfricanAmerican,
    Hispanic,
    Asian,
    Standard,
}

impl Variety {
    pub const ORDER: [Variety; CATEGORIES] = [
        Variety::AfricanAmerican,
        Variety::Hispanic,
        Variety::Asian,
        Variety::Standard,
    ];

    pub fn label(self) -> DialectLabel {
        match self {
            Variety::AfricanAmerican => DialectLabel::Aae,
            Variety::Hispanic => DialectLabel::Hispanic,
            Variety::Asian => DialectLabel::Asian,
            Variety::Standard => DialectLabel::Sae,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialectLabel {
    #[serde(rename = "AAE")]
    Aae,
    Hispanic,
    Asian,
    #[serde(rename = "SAE")]
    Sae,
    Unknown,
}

impl DialectLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            DialectLabel::Aae => "AAE",
            DialectLabel::Hispanic => "Hispanic",
            DialectLabel::Asian => "Asian",
            DialectLabel::Sae => "SAE",
            DialectLabel::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for DialectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DialectLabel {
    type Err = DialectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aae" | "africanamerican" | "african-american" => Ok(DialectLabel::Aae),
            "hispanic" => Ok(DialectLabel::Hispanic),
            "asian" => Ok(DialectLabel::Asian),
            "sae" | "standard" => Ok(DialectLabel::Sae),
            "unknown" => Ok(DialectLabel::Unknown),
            _ => Err(DialectError::UnknownLabel(s.to_string())),
        }
    }
}

/// Normalized `p(w | k)` per vocabulary token. Immutable once built.
#[derive(Debug, Clone)]
pub struct DialectTable {
    probs: HashMap<String, [f64; CATEGORIES]>,
}

impl DialectTable {
    /// Builds a table from raw non-negative weights, smoothing each column
    /// with `alpha` before normalizing it over the vocabulary. Tokens are
    /// lowercased; repeated tokens have their weights summed.
    pub fn from_weights<I, S>(rows: I, alpha: f64) -> Result<Self, DialectError>
    where
        I: IntoIterator<Item = (S, [f64; CATEGORIES])>,
        S: AsRef<str>,
    {
        let mut raw: HashMap<String, [f64; CATEGORIES]> = HashMap::new();
        for (token, weights) in rows {
            let entry = raw
                .entry(token.as_ref().to_lowercase())
                .or_insert([0.0; CATEGORIES]);
            for (acc, w) in entry.iter_mut().zip(weights) {
                *acc += w;
            }
        }
        if raw.is_empty() {
            return Err(DialectError::EmptyVocabulary);
        }
        let vocab = raw.len() as f64;
        let mut totals = [0.0; CATEGORIES];
        for weights in raw.values() {
            for (t, w) in totals.iter_mut().zip(weights) {
                *t += w;
            }
        }
        let probs = raw
            .into_iter()
            .map(|(token, weights)| {
                let mut p = [0.0; CATEGORIES];
                for k in 0..CATEGORIES {
                    p[k] = (weights[k] + alpha) / (totals[k] + alpha * vocab);
                }
                (token, p)
            })
            .collect();
        Ok(DialectTable { probs })
    }

    /// Parses a whitespace-separated table: `token w_aa w_hisp w_asian w_sae`
    /// per line. Blank lines and lines starting with `#` are skipped.
    pub fn parse(source: &str) -> Result<Self, DialectError> {
        let mut rows = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let token = fields.next().unwrap_or_default();
            let weights: Vec<&str> = fields.collect();
            if weights.len() != CATEGORIES {
                return Err(DialectError::Schema {
                    line: line_no,
                    found: weights.len(),
                });
            }
            let mut parsed = [0.0; CATEGORIES];
            for (slot, field) in parsed.iter_mut().zip(&weights) {
                let value: f64 = field.parse().map_err(|_| DialectError::Parse {
                    line: line_no,
                    message: format!("weight {field:?} is not a number"),
                })?;
                if !value.is_finite() || value < 0.0 {
                    return Err(DialectError::Parse {
                        line: line_no,
                        message: format!("weight {field:?} must be finite and non-negative"),
                    });
                }
                *slot = value;
            }
            rows.push((token.to_string(), parsed));
        }
        Self::from_weights(rows, SMOOTHING_ALPHA)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DialectError> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|source| DialectError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&source)
    }

    pub fn get(&self, token: &str) -> Option<&[f64; CATEGORIES]> {
        self.probs.get(token)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Column sums of `p(w | k)`; each is 1 up to rounding.
    pub fn column_sums(&self) -> [f64; CATEGORIES] {
        let mut sums = [0.0; CATEGORIES];
        for p in self.probs.values() {
            for (s, v) in sums.iter_mut().zip(p) {
                *s += v;
            }
        }
        sums
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceOptions {
    /// Texts with fewer in-vocabulary tokens are labeled `Unknown`.
    pub min_in_vocab: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            min_in_vocab: 3,
            tolerance: 1e-6,
            max_iterations: 100,
        }
    }
}

/// Serialized under the `dialect` key. `theta` is `None` exactly when the
/// label is `Unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectAnnotation {
    pub theta: Option<[f64; CATEGORIES]>,
    pub label: DialectLabel,
    pub in_vocab: usize,
}

/// Per-iteration record of an EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    /// `theta` after initialization and after each M-step.
    pub thetas: Vec<[f64; CATEGORIES]>,
    /// Log-likelihood at each entry of `thetas`.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

fn log_likelihood(theta: &[f64; CATEGORIES], rows: &[[f64; CATEGORIES]]) -> f64 {
    rows.iter()
        .map(|p| theta.iter().zip(p).map(|(t, p)| t * p).sum::<f64>().ln())
        .sum()
}

/// Runs EM from a uniform start over the per-token likelihood rows.
pub fn fit_proportions(rows: &[[f64; CATEGORIES]], options: &InferenceOptions) -> EmTrace {
    let mut theta = [1.0 / CATEGORIES as f64; CATEGORIES];
    let mut trace = EmTrace {
        thetas: vec![theta],
        log_likelihoods: vec![log_likelihood(&theta, rows)],
        converged: false,
    };
    if rows.is_empty() {
        return trace;
    }
    let n = rows.len() as f64;
    for _ in 0..options.max_iterations {
        let mut next = [0.0; CATEGORIES];
        for p in rows {
            let mut resp = [0.0; CATEGORIES];
            let mut norm = 0.0;
            for k in 0..CATEGORIES {
                resp[k] = theta[k] * p[k];
                norm += resp[k];
            }
            for k in 0..CATEGORIES {
                next[k] += resp[k] / norm;
            }
        }
        for v in next.iter_mut() {
            *v /= n;
        }
        let delta = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        trace.thetas.push(theta);
        trace.log_likelihoods.push(log_likelihood(&theta, rows));
        if delta < options.tolerance {
            trace.converged = true;
            break;
        }
    }
    trace
}

/// Argmax with ties resolved by [`Variety::ORDER`].
pub fn argmax_variety(theta: &[f64; CATEGORIES]) -> Variety {
    let mut best = 0;
    for k in 1..CATEGORIES {
        if theta[k] > theta[best] {
            best = k;
        }
    }
    Variety::ORDER[best]
}

pub fn dialect_label(annotation: &DialectAnnotation) -> DialectLabel {
    match &annotation.theta {
        Some(theta) if annotation.label != DialectLabel::Unknown => argmax_variety(theta).label(),
        _ => DialectLabel::Unknown,
    }
}

pub fn infer_proportions_with(
    text: &str,
    table: &DialectTable,
    options: &InferenceOptions,
) -> DialectAnnotation {
    let rows: Vec<[f64; CATEGORIES]> = text::normalized_words(text)
        .iter()
        .filter_map(|w| table.get(w).copied())
        .collect();
    let in_vocab = rows.len();
    if in_vocab == 0 || in_vocab < options.min_in_vocab {
        return DialectAnnotation {
            theta: None,
            label: DialectLabel::Unknown,
            in_vocab,
        };
    }
    let trace = fit_proportions(&rows, options);
    let theta = *trace.thetas.last().expect("trace holds the initial theta");
    DialectAnnotation {
        theta: Some(theta),
        label: argmax_variety(&theta).label(),
        in_vocab,
    }
}

pub fn infer_proportions(text: &str, table: &DialectTable) -> DialectAnnotation {
    infer_proportions_with(text, table, &InferenceOptions::default())
}
