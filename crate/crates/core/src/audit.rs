//! Repeated balanced sampling and aggregation of fairness metrics.
//!
//! For every target, each of `n_samples` samples draws the same number of
//! records per group, half gold-Favor and half gold-Against, without
//! replacement inside each (group, stance) stratum. Sample `i` is drawn from
//! a generator keyed by `digest(seed, target, i)`, so the stream depends only
//! on the corpus and the config: every model is scored on identical samples,
//! and a longer run extends a shorter one.
//!
//! Per cell (target, model, metric, group, direction) the result holds the
//! mean and population standard deviation over the samples where the metric
//! was defined.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attribute::Attribute;
use crate::corpus::{Corpus, StanceRecord};
use crate::gateway::StancePrediction;
use crate::metrics::{self, EvalItem, EvalView, Metric, MetricValue};
use crate::stance::{Direction, Stance};

pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid audit config: {0}")]
    Config(String),
    #[error("target {target:?}: cannot draw {per_group_size} per group; stratum {group}/{stance} has {available} record(s), {needed} needed")]
    Infeasible {
        target: String,
        group: String,
        stance: Stance,
        available: usize,
        needed: usize,
        per_group_size: usize,
    },
    #[error("model {model:?} has no prediction for {missing} record(s), e.g. {example:?}")]
    MissingPredictions {
        model: String,
        missing: usize,
        example: String,
    },
    #[error("no predictions supplied")]
    NoModels,
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoSize {
    Auto,
}

/// Records per group in each sample. `Auto` takes the largest even size the
/// smallest stratum allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerGroupSize {
    Fixed(usize),
    Auto(AutoSize),
}

impl Default for PerGroupSize {
    fn default() -> Self {
        PerGroupSize::Auto(AutoSize::Auto)
    }
}

impl fmt::Display for PerGroupSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerGroupSize::Fixed(n) => write!(f, "{n}"),
            PerGroupSize::Auto(_) => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupMode {
    /// Each group against the union of the other audited groups.
    #[default]
    OneVsRest,
    /// Each ordered pair of audited groups, first against second.
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeutralPolicy {
    /// Neutral answers count as "not positive" in EO/DI/PP.
    #[default]
    NotPositive,
    /// Neutral answers are removed from each sample before scoring.
    Drop,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_directions() -> Vec<Direction> {
    Direction::BOTH.to_vec()
}
fn default_metrics() -> Vec<Metric> {
    Metric::FAIRNESS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub attribute: Attribute,
    /// Audited groups; empty means the attribute's default groups.
    #[serde(default)]
    pub groups: Vec<String>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub per_group_size: PerGroupSize,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub group_mode: GroupMode,
    #[serde(default)]
    pub neutral_policy: NeutralPolicy,
}

impl AuditConfig {
    pub fn new(attribute: Attribute) -> Self {
        AuditConfig {
            attribute,
            groups: Vec::new(),
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            per_group_size: PerGroupSize::default(),
            directions: default_directions(),
            metrics: default_metrics(),
            group_mode: GroupMode::default(),
            neutral_policy: NeutralPolicy::default(),
        }
    }

    /// Canonical group ids, after defaults and alias resolution.
    pub fn resolved_groups(&self) -> Result<Vec<String>, AuditError> {
        let raw = if self.groups.is_empty() {
            self.attribute.default_groups()
        } else {
            self.groups.clone()
        };
        let mut out: Vec<String> = Vec::with_capacity(raw.len());
        for g in &raw {
            let canon = self.attribute.canonical_group(g).ok_or_else(|| {
                AuditError::Config(format!("{g:?} is not a {} group", self.attribute))
            })?;
            if out.iter().any(|o| o == canon) {
                return Err(AuditError::Config(format!("group {canon} listed twice")));
            }
            out.push(canon.to_string());
        }
        if out.len() < 2 {
            return Err(AuditError::Config("at least two groups are needed".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<Vec<String>, AuditError> {
        if self.n_samples == 0 {
            return Err(AuditError::Config("n_samples must be at least 1".into()));
        }
        if let PerGroupSize::Fixed(n) = self.per_group_size {
            if n == 0 || n % 2 == 1 {
                return Err(AuditError::Config(format!(
                    "per_group_size {n} must be a positive even number"
                )));
            }
        }
        if self.directions.is_empty() {
            return Err(AuditError::Config("no directions to evaluate".into()));
        }
        if self.metrics.is_empty() || self.metrics.iter().any(|m| !Metric::FAIRNESS.contains(m)) {
            return Err(AuditError::Config("metrics must be a non-empty subset of EO, DI, PP".into()));
        }
        self.resolved_groups()
    }
}

fn stance_slot(s: Stance) -> usize {
    match s {
        Stance::Favor => 0,
        Stance::Against => 1,
    }
}

/// The sampling population for one target.
#[derive(Debug, Clone)]
pub struct SampleFrame<'a> {
    target: String,
    groups: Vec<String>,
    records: Vec<&'a StanceRecord>,
    group_of: Vec<usize>,
    /// `strata[g * 2 + stance]` lists indices into `records`.
    strata: Vec<Vec<usize>>,
    per_group_size: usize,
    seed: u64,
}

impl<'a> SampleFrame<'a> {
    /// Builds the frame from `records` (typically one target's records),
    /// keeping those whose group is audited.
    pub fn new<I>(target: &str, records: I, config: &AuditConfig) -> Result<Self, AuditError>
    where
        I: IntoIterator<Item = &'a StanceRecord>,
    {
        let groups = config.validate()?;
        let mut kept = Vec::new();
        let mut group_of = Vec::new();
        let mut strata = vec![Vec::new(); groups.len() * 2];
        for r in records {
            let Some(g) = config.attribute.group_of(r) else { continue };
            let Some(gi) = groups.iter().position(|x| x == g) else { continue };
            strata[gi * 2 + stance_slot(r.gold_stance)].push(kept.len());
            group_of.push(gi);
            kept.push(r);
        }
        let smallest = strata.iter().map(Vec::len).min().unwrap_or(0);
        let per_group_size = match config.per_group_size {
            PerGroupSize::Fixed(n) => n,
            PerGroupSize::Auto(_) => 2 * smallest,
        };
        let half = per_group_size / 2;
        for (i, s) in strata.iter().enumerate() {
            if s.len() < half || half == 0 {
                return Err(AuditError::Infeasible {
                    target: target.to_string(),
                    group: groups[i / 2].clone(),
                    stance: Stance::ALL[i % 2],
                    available: s.len(),
                    needed: half.max(1),
                    per_group_size,
                });
            }
        }
        Ok(SampleFrame {
            target: target.to_string(),
            groups,
            records: kept,
            group_of,
            strata,
            per_group_size,
            seed: config.seed,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn per_group_size(&self) -> usize {
        self.per_group_size
    }

    pub fn records(&self) -> &[&'a StanceRecord] {
        &self.records
    }

    fn rng_for(&self, sample_index: usize) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"balanced-sample");
        h.update(self.seed.to_le_bytes());
        h.update((self.target.len() as u64).to_le_bytes());
        h.update(self.target.as_bytes());
        h.update((sample_index as u64).to_le_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    /// Frame indices of sample `sample_index`, stratum by stratum.
    pub fn sample_indices(&self, sample_index: usize) -> Vec<usize> {
        let mut rng = self.rng_for(sample_index);
        let half = self.per_group_size / 2;
        let mut out = Vec::with_capacity(self.per_group_size * self.groups.len());
        for stratum in &self.strata {
            out.extend(
                index::sample(&mut rng, stratum.len(), half)
                    .into_iter()
                    .map(|j| stratum[j]),
            );
        }
        out
    }

    pub fn sample_record_ids(&self, sample_index: usize) -> Vec<&'a str> {
        self.sample_indices(sample_index)
            .into_iter()
            .map(|i| self.records[i].id.as_str())
            .collect()
    }

    /// Fails if any frame record lacks a prediction.
    pub fn check_coverage(
        &self,
        model: &str,
        predictions: &BTreeMap<String, StancePrediction>,
    ) -> Result<(), AuditError> {
        let missing: Vec<&str> = self
            .records
            .iter()
            .filter(|r| !predictions.contains_key(&r.id))
            .map(|r| r.id.as_str())
            .collect();
        match missing.first() {
            None => Ok(()),
            Some(first) => Err(AuditError::MissingPredictions {
                model: model.to_string(),
                missing: missing.len(),
                example: first.to_string(),
            }),
        }
    }
}

/// Sample `sample_index` of the frame as an evaluation view over one
/// model's predictions. Callers check coverage first.
pub fn draw_balanced_sample(
    frame: &SampleFrame<'_>,
    predictions: &BTreeMap<String, StancePrediction>,
    sample_index: usize,
) -> EvalView {
    frame
        .sample_indices(sample_index)
        .into_iter()
        .map(|i| {
            let r = frame.records[i];
            EvalItem::new(
                r.gold_stance,
                predictions[&r.id].stance,
                frame.groups[frame.group_of[i]].clone(),
            )
        })
        .collect()
}

/// Digest of the whole sample stream of a frame, to compare streams cheaply.
pub fn sample_stream_digest(frame: &SampleFrame<'_>, n_samples: usize) -> String {
    let mut h = Sha256::new();
    for i in 0..n_samples {
        let mut ids = frame.sample_record_ids(i);
        ids.sort_unstable();
        for id in ids {
            h.update((id.len() as u64).to_le_bytes());
            h.update(id.as_bytes());
        }
        h.update(b"|");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub target: String,
    pub model: String,
    pub metric: Metric,
    pub group: String,
    pub direction: Direction,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Samples on which the metric was defined.
    pub n_samples: usize,
    pub n_undefined: usize,
    /// Undefined on more than half of the samples.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub weighted_f1: Option<f64>,
    pub neutral_rate: Option<f64>,
    pub mean_abs_eo: Option<f64>,
    pub n_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFrameInfo {
    pub target: String,
    pub per_group_size: usize,
    pub frame_records: usize,
    pub sample_stream_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditMetadata {
    pub dataset: String,
    pub attribute: Attribute,
    pub groups: Vec<String>,
    pub n_samples: usize,
    pub seed: u64,
    pub per_group_size: PerGroupSize,
    pub group_mode: GroupMode,
    pub neutral_policy: NeutralPolicy,
    pub directions: Vec<Direction>,
    pub targets: Vec<TargetFrameInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub metadata: AuditMetadata,
    pub cells: Vec<MetricCell>,
    pub models: Vec<ModelSummary>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl AuditResult {
    pub fn cell(
        &self,
        target: &str,
        model: &str,
        metric: Metric,
        group: &str,
        direction: Direction,
    ) -> Option<&MetricCell> {
        self.cells.iter().find(|c| {
            c.target == target
                && c.model == model
                && c.metric == metric
                && c.group == group
                && c.direction == direction
        })
    }

    pub fn model_names(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.model.as_str()).collect()
    }

    pub fn targets(&self) -> Vec<&str> {
        self.metadata.targets.iter().map(|t| t.target.as_str()).collect()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), AuditError> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("audit result serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| io_error(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, AuditError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| AuditError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), AuditError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        write_cells_csv(std::slice::from_ref(self), &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| io_error(path, e))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> AuditError {
    AuditError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Fixed 4-decimal rendering used by every human-facing table; missing
/// values render as an empty field.
pub fn fmt4(v: Option<f64>) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.4}");
            if s == "-0.0000" {
                "0.0000".into()
            } else {
                s
            }
        }
        None => String::new(),
    }
}

pub const CELL_CSV_HEADER: &str =
    "dataset,attribute,target,model,metric,group,direction,mean,sd,n_samples,n_undefined,degenerate";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per metric cell across all results.
pub fn write_cells_csv<W: Write>(results: &[AuditResult], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{CELL_CSV_HEADER}")?;
    for result in results {
        for c in &result.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&result.metadata.dataset),
                result.metadata.attribute,
                csv_field(&c.target),
                csv_field(&c.model),
                c.metric,
                csv_field(&c.group),
                c.direction,
                fmt4(c.mean),
                fmt4(c.sd),
                c.n_samples,
                c.n_undefined,
                c.degenerate
            )?;
        }
    }
    Ok(())
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// (group label, focus group, restrict-to pair) for every comparison.
fn comparisons(groups: &[String], mode: GroupMode) -> Vec<(String, String, Option<[String; 2]>)> {
    match mode {
        GroupMode::OneVsRest => groups.iter().map(|g| (g.clone(), g.clone(), None)).collect(),
        GroupMode::Pairwise => {
            let mut out = Vec::new();
            for a in groups {
                for b in groups {
                    if a != b {
                        out.push((format!("{a}|{b}"), a.clone(), Some([a.clone(), b.clone()])));
                    }
                }
            }
            out
        }
    }
}

type CellKey = (usize, usize, usize, usize); // model, metric, comparison, direction

/// Runs the full audit over every target of `corpus`.
///
/// `predictions` maps model id to that model's predictions keyed by record id.
pub fn run_audit(
    corpus: &Corpus,
    predictions: &BTreeMap<String, BTreeMap<String, StancePrediction>>,
    config: &AuditConfig,
) -> Result<AuditResult, AuditError> {
    let groups = config.validate()?;
    if predictions.is_empty() {
        return Err(AuditError::NoModels);
    }
    let models: Vec<&String> = predictions.keys().collect();
    let comps = comparisons(&groups, config.group_mode);
    let dataset = corpus
        .iter()
        .map(|r| r.dataset_tag.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect::<Vec<_>>()
        .join("+");

    let mut cells = Vec::new();
    let mut target_info = Vec::new();
    let mut warnings = Vec::new();

    for target in corpus.targets() {
        let frame = SampleFrame::new(target, corpus.for_target(target), config)?;
        for (model, preds) in predictions {
            frame.check_coverage(model, preds)?;
        }
        target_info.push(TargetFrameInfo {
            target: target.to_string(),
            per_group_size: frame.per_group_size(),
            frame_records: frame.records().len(),
            sample_stream_digest: sample_stream_digest(&frame, config.n_samples),
        });

        let mut keys: Vec<CellKey> = Vec::new();
        for m in 0..models.len() {
            for k in 0..config.metrics.len() {
                for c in 0..comps.len() {
                    for d in 0..config.directions.len() {
                        keys.push((m, k, c, d));
                    }
                }
            }
        }

        let per_sample: Vec<Vec<Option<f64>>> = (0..config.n_samples)
            .into_par_iter()
            .map(|i| {
                let views: Vec<EvalView> = models
                    .iter()
                    .map(|m| {
                        let v = draw_balanced_sample(&frame, &predictions[*m], i);
                        match config.neutral_policy {
                            NeutralPolicy::NotPositive => v,
                            NeutralPolicy::Drop => v.without_neutral(),
                        }
                    })
                    .collect();
                keys.iter()
                    .map(|&(m, k, c, d)| {
                        let (_, focus, pair) = &comps[c];
                        let value = match pair {
                            None => metrics::fairness_metric(
                                config.metrics[k],
                                &views[m],
                                focus,
                                config.directions[d],
                            ),
                            Some([a, b]) => metrics::fairness_metric(
                                config.metrics[k],
                                &views[m].restricted_to(&[a, b]),
                                focus,
                                config.directions[d],
                            ),
                        };
                        value.ok().map(|v| v.value)
                    })
                    .collect()
            })
            .collect();

        for (slot, &(m, k, c, d)) in keys.iter().enumerate() {
            let defined: Vec<f64> = per_sample.iter().filter_map(|s| s[slot]).collect();
            let n_undefined = config.n_samples - defined.len();
            let stats = mean_sd(&defined);
            let degenerate = 2 * n_undefined > config.n_samples;
            let cell = MetricCell {
                target: target.to_string(),
                model: models[m].clone(),
                metric: config.metrics[k],
                group: comps[c].0.clone(),
                direction: config.directions[d],
                mean: stats.map(|s| s.0),
                sd: stats.map(|s| s.1),
                n_samples: defined.len(),
                n_undefined,
                degenerate,
            };
            if degenerate {
                let msg = format!(
                    "{} undefined on {n_undefined}/{} samples for target {:?}, model {:?}, group {}, direction {}",
                    cell.metric, config.n_samples, cell.target, cell.model, cell.group, cell.direction
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            cells.push(cell);
        }
    }

    let models = predictions
        .iter()
        .map(|(model, preds)| summarize_model(corpus, model, preds, &cells))
        .collect();

    Ok(AuditResult {
        metadata: AuditMetadata {
            dataset,
            attribute: config.attribute,
            groups,
            n_samples: config.n_samples,
            seed: config.seed,
            per_group_size: config.per_group_size,
            group_mode: config.group_mode,
            neutral_policy: config.neutral_policy,
            directions: config.directions.clone(),
            targets: target_info,
        },
        cells,
        models,
        warnings,
    })
}

fn summarize_model(
    corpus: &Corpus,
    model: &str,
    preds: &BTreeMap<String, StancePrediction>,
    cells: &[MetricCell],
) -> ModelSummary {
    let view: EvalView = corpus
        .iter()
        .filter_map(|r| {
            preds
                .get(&r.id)
                .map(|p| EvalItem::new(r.gold_stance, p.stance, metrics::OVERALL))
        })
        .collect();
    let eo_means: Vec<MetricValue> = cells
        .iter()
        .filter(|c| c.model == model && c.metric == Metric::EqualOpportunity)
        .filter_map(|c| {
            c.mean.map(|mean| MetricValue {
                metric: Metric::EqualOpportunity,
                group: c.group.clone(),
                direction: Some(c.direction),
                value: mean,
            })
        })
        .collect();
    ModelSummary {
        model: model.to_string(),
        weighted_f1: metrics::weighted_f1(&view).ok().map(|v| v.value),
        neutral_rate: metrics::neutral_rate(&view).ok().map(|v| v.value),
        mean_abs_eo: metrics::mean_abs_eo(&eo_means).ok().map(|v| v.value),
        n_predictions: view.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readability::{ReadabilityAnnotation, ReadabilityClass};
    use crate::stance::PredictedStance;

    fn record(id: usize, class: ReadabilityClass, stance: Stance) -> StanceRecord {
        let mut r = StanceRecord::new(format!("r{id}"), "text", "T", stance, "synthetic");
        r.readability = Some(ReadabilityAnnotation {
            words: 1,
            sentences: 1,
            syllables: 1,
            score: 0.0,
            class,
        });
        r
    }

    fn corpus(per_stratum: usize, favor_in_easy: usize) -> Corpus {
        let mut records = Vec::new();
        for class in ReadabilityClass::ALL {
            let favors = if class == ReadabilityClass::Easy { favor_in_easy } else { per_stratum };
            for _ in 0..favors {
                records.push(record(records.len(), class, Stance::Favor));
            }
            for _ in 0..per_stratum {
                records.push(record(records.len(), class, Stance::Against));
            }
        }
        Corpus::new(records).unwrap()
    }

    fn config(size: PerGroupSize) -> AuditConfig {
        AuditConfig {
            per_group_size: size,
            n_samples: 5,
            seed: 42,
            ..AuditConfig::new(Attribute::Readability)
        }
    }

    #[test]
    fn four_group_sample_shape() {
        let c = corpus(30, 30);
        let cfg = config(PerGroupSize::Fixed(20));
        let frame = SampleFrame::new("T", c.iter(), &cfg).unwrap();
        let view = draw_balanced_sample(&frame, &all_favor(&c), 0);
        assert_eq!(view.len(), 80);
        for class in ReadabilityClass::ALL {
            for stance in Stance::ALL {
                let n = view
                    .items()
                    .iter()
                    .filter(|i| i.group == class.as_str() && i.gold == stance)
                    .count();
                assert_eq!(n, 10);
            }
        }
        let ids = frame.sample_record_ids(0);
        assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), 80);
    }

    fn all_favor(c: &Corpus) -> BTreeMap<String, StancePrediction> {
        c.iter()
            .map(|r| {
                (
                    r.id.clone(),
                    StancePrediction {
                        record_id: r.id.clone(),
                        model_id: "m".into(),
                        raw: "FAVOR".into(),
                        stance: PredictedStance::Favor,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn same_seed_and_index_give_same_sample() {
        let c = corpus(30, 30);
        let cfg = config(PerGroupSize::Fixed(20));
        let a = SampleFrame::new("T", c.iter(), &cfg).unwrap();
        let b = SampleFrame::new("T", c.iter(), &cfg).unwrap();
        assert_eq!(a.sample_record_ids(3), b.sample_record_ids(3));
        assert_ne!(a.sample_record_ids(3), a.sample_record_ids(4));
    }

    #[test]
    fn infeasible_stratum_is_reported() {
        let c = corpus(30, 3);
        let err = SampleFrame::new("T", c.iter(), &config(PerGroupSize::Fixed(20))).unwrap_err();
        match err {
            AuditError::Infeasible {
                group,
                stance,
                available,
                needed,
                ..
            } => {
                assert_eq!(group, "Easy");
                assert_eq!(stance, Stance::Favor);
                assert_eq!((available, needed), (3, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn auto_size_uses_smallest_stratum() {
        let c = corpus(30, 7);
        let frame = SampleFrame::new("T", c.iter(), &config(PerGroupSize::default())).unwrap();
        assert_eq!(frame.per_group_size(), 14);
    }

    #[test]
    fn odd_fixed_size_is_rejected() {
        let cfg = config(PerGroupSize::Fixed(7));
        assert!(matches!(cfg.validate(), Err(AuditError::Config(_))));
        let cfg = AuditConfig {
            n_samples: 0,
            ..config(PerGroupSize::default())
        };
        assert!(matches!(cfg.validate(), Err(AuditError::Config(_))));
    }

    #[test]
    fn per_group_size_serde() {
        let auto: PerGroupSize = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(auto, PerGroupSize::default());
        let fixed: PerGroupSize = serde_json::from_str("100").unwrap();
        assert_eq!(fixed, PerGroupSize::Fixed(100));
        let cfg: AuditConfig = serde_json::from_str(r#"{"attribute":"dialect"}"#).unwrap();
        assert_eq!(cfg.n_samples, 1000);
        assert_eq!(cfg.directions, Direction::BOTH.to_vec());
        assert_eq!(cfg.resolved_groups().unwrap(), vec!["AAE", "SAE"]);
    }

    #[test]
    fn single_sample_has_zero_sd() {
        let c = corpus(30, 30);
        let cfg = AuditConfig {
            n_samples: 1,
            ..config(PerGroupSize::Fixed(20))
        };
        let preds = BTreeMap::from([("m".to_string(), all_favor(&c))]);
        let result = run_audit(&c, &preds, &cfg).unwrap();
        for cell in &result.cells {
            if let Some(sd) = cell.sd {
                assert_eq!(sd, 0.0);
            }
        }
    }

    #[test]
    fn undefined_cells_are_missing_not_zero() {
        // Every answer is Favor: PP with Against as positive is never defined.
        let c = corpus(30, 30);
        let preds = BTreeMap::from([("m".to_string(), all_favor(&c))]);
        let result = run_audit(&c, &preds, &config(PerGroupSize::Fixed(20))).unwrap();
        let pp = result
            .cell("T", "m", Metric::PredictiveParity, "Easy", Direction::AgainstAsPositive)
            .unwrap();
        assert_eq!(pp.mean, None);
        assert_eq!(pp.n_undefined, 5);
        assert!(pp.degenerate);
        assert!(!result.warnings.is_empty());
        let di = result
            .cell("T", "m", Metric::DemographicParity, "Easy", Direction::FavorAsPositive)
            .unwrap();
        assert_eq!(di.mean, Some(0.0));
        assert_eq!(di.sd, Some(0.0));
    }

    #[test]
    fn missing_predictions_are_an_error() {
        let c = corpus(30, 30);
        let mut preds = all_favor(&c);
        preds.remove("r0");
        let err = run_audit(
            &c,
            &BTreeMap::from([("m".to_string(), preds)]),
            &config(PerGroupSize::Fixed(20)),
        )
        .unwrap_err();
        assert!(matches!(err, AuditError::MissingPredictions { missing: 1, .. }));
    }

    #[test]
    fn pairwise_mode_labels_ordered_pairs() {
        let c = corpus(30, 30);
        let cfg = AuditConfig {
            group_mode: GroupMode::Pairwise,
            groups: vec!["Easy".into(), "Medium".into()],
            ..config(PerGroupSize::Fixed(20))
        };
        let preds = BTreeMap::from([("m".to_string(), all_favor(&c))]);
        let result = run_audit(&c, &preds, &cfg).unwrap();
        let groups: BTreeSet<&str> = result.cells.iter().map(|c| c.group.as_str()).collect();
        assert_eq!(groups, BTreeSet::from(["Easy|Medium", "Medium|Easy"]));
    }

    #[test]
    fn mean_sd_population() {
        let (m, sd) = mean_sd(&[1.0, 3.0]).unwrap();
        assert_eq!((m, sd), (2.0, 1.0));
        assert_eq!(mean_sd(&[]), None);
    }

    #[test]
    fn fixed_decimal_formatting() {
        assert_eq!(fmt4(Some(0.30004)), "0.3000");
        assert_eq!(fmt4(Some(-0.00001)), "0.0000");
        assert_eq!(fmt4(Some(-0.25)), "-0.2500");
        assert_eq!(fmt4(None), "");
    }
}
