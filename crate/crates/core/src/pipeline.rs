//! End-to-end pipeline pieces: config files, annotation, artifact layout
//! and run manifests.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attribute::Attribute;
use crate::audit::AuditConfig;
use crate::corpus::{self, AttributeAnnotation, Corpus, DatasetFormat, Side};
use crate::dialect::{self, DialectTable, InferenceOptions};
use crate::gateway::BackendDescriptor;
use crate::readability;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Dialect(#[from] dialect::DialectError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Audit(#[from] crate::audit::AuditError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub format: DatasetFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSpec {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSpec {
    pub dataset: String,
    /// Down-sample the majority of a two-group dialect audit before sampling.
    #[serde(default)]
    pub balance: Option<BalanceSpec>,
    #[serde(flatten)]
    pub config: AuditConfig,
}

/// The JSON pipeline config. Relative paths resolve against the config
/// file's directory. API keys come from environment variables only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub dialect_table: Option<PathBuf>,
    #[serde(default)]
    pub backends: Vec<BackendDescriptor>,
    #[serde(default)]
    pub audits: Vec<AuditSpec>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
}

/// A config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub path: PathBuf,
    pub digest: String,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl PipelineConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig, PipelineError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        let mut config: PipelineConfig =
            serde_json::from_slice(&bytes).map_err(|e| PipelineError::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate(path)?;
        Ok(LoadedConfig {
            config,
            path: path.to_path_buf(),
            digest: digest_hex(&bytes),
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut self.datasets {
            fix(&mut d.path);
        }
        if let Some(t) = &mut self.dialect_table {
            fix(t);
        }
        fix(&mut self.output_dir);
        if let Some(c) = &mut self.cache_path {
            fix(c);
        }
    }

    /// Checks names, references and paths; creates the output directory.
    pub fn validate(&self, source: &Path) -> Result<(), PipelineError> {
        let err = |message: String| PipelineError::Config {
            path: source.display().to_string(),
            message,
        };
        let mut names = std::collections::HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return Err(err(format!("dataset {:?} declared twice", d.name)));
            }
            if !d.path.exists() {
                return Err(err(format!("dataset file {} does not exist", d.path.display())));
            }
        }
        if let Some(t) = &self.dialect_table {
            if !t.exists() {
                return Err(err(format!("dialect table {} does not exist", t.display())));
            }
        }
        let mut models = std::collections::HashSet::new();
        for b in &self.backends {
            b.validate().map_err(|e| err(e.to_string()))?;
            if !models.insert(b.model.as_str()) {
                return Err(err(format!("model {:?} configured twice", b.model)));
            }
        }
        for a in &self.audits {
            if !names.contains(a.dataset.as_str()) {
                return Err(err(format!("audit refers to unknown dataset {:?}", a.dataset)));
            }
            a.config.validate().map_err(|e| err(e.to_string()))?;
            if a.balance.is_some() && a.config.resolved_groups().map_or(0, |g| g.len()) != 2 {
                return Err(err("balancing needs exactly two audited groups".into()));
            }
        }
        fs::create_dir_all(&self.output_dir).map_err(|e| io_error(&self.output_dir, e))?;
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout {
            root: self.output_dir.clone(),
            cache: self
                .cache_path
                .clone()
                .unwrap_or_else(|| self.output_dir.join("cache.jsonl")),
        }
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetSpec> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

/// Where each pipeline artifact lives under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
    pub cache: PathBuf,
}

pub fn file_slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

impl Layout {
    pub fn dataset_dir(&self, dataset: &str) -> PathBuf {
        self.root.join("datasets").join(file_slug(dataset))
    }
    pub fn annotated(&self, dataset: &str) -> PathBuf {
        self.dataset_dir(dataset).join("annotated.jsonl")
    }
    pub fn balanced(&self, dataset: &str, attribute: Attribute) -> PathBuf {
        self.dataset_dir(dataset)
            .join(format!("balanced_{attribute}.jsonl"))
    }
    pub fn predictions(&self, dataset: &str, model: &str) -> PathBuf {
        self.dataset_dir(dataset)
            .join("predictions")
            .join(format!("{}.jsonl", file_slug(model)))
    }
    pub fn audit_dir(&self, dataset: &str, attribute: Attribute) -> PathBuf {
        self.root
            .join("audits")
            .join(format!("{}_{attribute}", file_slug(dataset)))
    }
    pub fn tables(&self) -> PathBuf {
        self.root.join("tables")
    }
    pub fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }
}

/// Annotated corpus plus the ids of records with no scorable words.
#[derive(Debug, Clone)]
pub struct Annotated {
    pub corpus: Corpus,
    pub skipped: Vec<String>,
}

/// Scores readability and infers dialect for every record. Records whose
/// text has no word tokens cannot be scored and are left out.
pub fn annotate_corpus(
    corpus: Corpus,
    table: &DialectTable,
    options: &InferenceOptions,
) -> Result<Annotated, PipelineError> {
    let scored: Vec<(String, Option<AttributeAnnotation>)> = corpus
        .records()
        .par_iter()
        .map(|r| {
            let ann = readability::flesch_score(&r.text).ok().map(|readability| {
                AttributeAnnotation {
                    readability,
                    dialect: dialect::infer_proportions_with(&r.text, table, options),
                }
            });
            (r.id.clone(), ann)
        })
        .collect();
    let mut skipped = Vec::new();
    let mut annotations = HashMap::with_capacity(scored.len());
    for (id, ann) in scored {
        match ann {
            Some(a) => {
                annotations.insert(id, a);
            }
            None => skipped.push(id),
        }
    }
    if !skipped.is_empty() {
        log::warn!("{} record(s) have no word tokens and were not annotated", skipped.len());
    }
    let kept = Corpus::new(
        corpus
            .into_records()
            .into_iter()
            .filter(|r| annotations.contains_key(&r.id))
            .collect(),
    )?;
    Ok(Annotated {
        corpus: corpus::attach_annotations(kept, &annotations)?,
        skipped,
    })
}

/// Two-group balancing on an annotated corpus for the given groups.
pub fn balance_by_attribute(
    corpus: &Corpus,
    attribute: Attribute,
    group_a: &str,
    group_b: &str,
    seed: u64,
) -> Result<Corpus, PipelineError> {
    Ok(corpus::balance_two_group(
        corpus,
        |r| match attribute.group_of(r) {
            Some(g) if g == group_a => Some(Side::A),
            Some(g) if g == group_b => Some(Side::B),
            _ => None,
        },
        seed,
    )?)
}

/// Provenance written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_digest: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config_digest: String) -> Self {
        Manifest {
            tool: "stance-audit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_digest,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| io_error(path, e))
    }
}

fn ensure_parent(path: &Path) -> Result<(), PipelineError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => fs::create_dir_all(parent).map_err(|e| io_error(parent, e)),
        None => Ok(()),
    }
}

fn read_canonical(path: &Path) -> Result<Corpus, PipelineError> {
    Ok(corpus::load_dataset(path, DatasetFormat::CanonicalJsonl)?)
}

fn stage_manifest(cfg: &LoadedConfig, stage: &str) -> Manifest {
    let mut m = Manifest::new(stage, cfg.digest.clone());
    m.input(&cfg.path);
    m
}

fn finish(cfg: &LoadedConfig, manifest: Manifest) -> Result<Manifest, PipelineError> {
    let path = cfg
        .config
        .output_dir
        .join(format!("manifest_{}.json", manifest.subcommand));
    manifest.write(&path)?;
    Ok(manifest)
}

/// Loads every dataset, annotates it and writes `annotated.jsonl`.
pub fn run_annotate(cfg: &LoadedConfig) -> Result<Manifest, PipelineError> {
    let config = &cfg.config;
    let layout = config.layout();
    let table_path = config.dialect_table.as_ref().ok_or_else(|| PipelineError::Config {
        path: cfg.path.display().to_string(),
        message: "annotation needs a dialect_table".into(),
    })?;
    let table = DialectTable::load(table_path)?;
    let mut manifest = stage_manifest(cfg, "annotate");
    manifest.input(table_path);
    for d in &config.datasets {
        let corpus = corpus::load_dataset(&d.path, d.format)?;
        let annotated = annotate_corpus(corpus, &table, &InferenceOptions::default())?;
        let out = layout.annotated(&d.name);
        ensure_parent(&out)?;
        corpus::write_canonical(&annotated.corpus, &out)?;
        log::info!("annotated {} records of {}", annotated.corpus.len(), d.name);
        manifest.input(&d.path);
        manifest.output(&out);
        if !annotated.skipped.is_empty() {
            manifest.notes.push(format!(
                "{}: {} record(s) without word tokens left out",
                d.name,
                annotated.skipped.len()
            ));
        }
    }
    finish(cfg, manifest)
}

/// Writes the balanced corpus of every audit that asks for one.
pub fn run_balance(cfg: &LoadedConfig) -> Result<Manifest, PipelineError> {
    let layout = cfg.config.layout();
    let mut manifest = stage_manifest(cfg, "balance");
    for spec in &cfg.config.audits {
        let Some(balance) = &spec.balance else { continue };
        let groups = spec.config.resolved_groups()?;
        let input = layout.annotated(&spec.dataset);
        let corpus = read_canonical(&input)?;
        let balanced = balance_by_attribute(
            &corpus,
            spec.config.attribute,
            &groups[0],
            &groups[1],
            balance.seed,
        )?;
        let out = layout.balanced(&spec.dataset, spec.config.attribute);
        corpus::write_canonical(&balanced, &out)?;
        log::info!(
            "balanced {} {}: {} -> {} records",
            spec.dataset,
            spec.config.attribute,
            corpus.len(),
            balanced.len()
        );
        manifest
            .seeds
            .insert(format!("{}/{}", spec.dataset, spec.config.attribute), balance.seed);
        manifest.input(&input);
        manifest.output(&out);
    }
    finish(cfg, manifest)
}

/// Queries every backend for every annotated record, through the cache.
pub fn run_predict(cfg: &LoadedConfig) -> Result<Manifest, PipelineError> {
    let config = &cfg.config;
    let layout = config.layout();
    let mut manifest = stage_manifest(cfg, "predict");
    if config.backends.is_empty() {
        return Err(PipelineError::Config {
            path: cfg.path.display().to_string(),
            message: "no backends configured".into(),
        });
    }
    let cache = crate::gateway::PredictionCache::open(&layout.cache)?;
    for d in &config.datasets {
        let input = layout.annotated(&d.name);
        let corpus = read_canonical(&input)?;
        manifest.input(&input);
        for descriptor in &config.backends {
            let backend = descriptor.build()?;
            let outcome = crate::gateway::run_batch(
                corpus.records(),
                backend.as_ref(),
                &cache,
                descriptor.into(),
            )?;
            let out = layout.predictions(&d.name, &descriptor.model);
            ensure_parent(&out)?;
            crate::gateway::write_predictions(outcome.predictions.values(), &out)?;
            log::info!(
                "{} on {}: {} predictions, {} cache hits, {} failures",
                descriptor.model,
                d.name,
                outcome.predictions.len(),
                outcome.cache_hits,
                outcome.failures.len()
            );
            if !outcome.failures.is_empty() {
                manifest.notes.push(format!(
                    "{} on {}: {} record(s) failed",
                    descriptor.model,
                    d.name,
                    outcome.failures.len()
                ));
            }
            manifest.notes.extend(descriptor.decoding_note());
            if let crate::gateway::BackendKind::MockBiasedOracle(p) = &descriptor.kind {
                manifest.seeds.insert(descriptor.model.clone(), p.seed);
            }
            manifest.output(&out);
        }
    }
    manifest.output(&layout.cache);
    finish(cfg, manifest)
}

/// The corpus an audit samples from: balanced if requested, else annotated.
pub fn audit_corpus_path(config: &PipelineConfig, spec: &AuditSpec) -> PathBuf {
    let layout = config.layout();
    match spec.balance {
        Some(_) => layout.balanced(&spec.dataset, spec.config.attribute),
        None => layout.annotated(&spec.dataset),
    }
}

/// Runs every configured audit and writes `result.json` and `result.csv`.
pub fn run_audits(cfg: &LoadedConfig) -> Result<Manifest, PipelineError> {
    let config = &cfg.config;
    let layout = config.layout();
    let mut manifest = stage_manifest(cfg, "audit");
    for spec in &config.audits {
        let input = audit_corpus_path(config, spec);
        let corpus = read_canonical(&input)?;
        manifest.input(&input);
        let mut predictions = BTreeMap::new();
        for b in &config.backends {
            let path = layout.predictions(&spec.dataset, &b.model);
            predictions.insert(b.model.clone(), crate::gateway::read_predictions(&path)?);
            manifest.input(&path);
        }
        let result = crate::audit::run_audit(&corpus, &predictions, &spec.config)?;
        let dir = layout.audit_dir(&spec.dataset, spec.config.attribute);
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        result.write_json(dir.join("result.json"))?;
        result.write_csv(dir.join("result.csv"))?;
        manifest
            .seeds
            .insert(format!("{}/{}", spec.dataset, spec.config.attribute), spec.config.seed);
        manifest.notes.extend(result.warnings.iter().cloned());
        manifest.output(&dir.join("result.json"));
        manifest.output(&dir.join("result.csv"));
    }
    finish(cfg, manifest)
}

/// Emits tables and plots for every audit result of the config.
pub fn run_report(cfg: &LoadedConfig) -> Result<Manifest, PipelineError> {
    let config = &cfg.config;
    let layout = config.layout();
    let mut manifest = stage_manifest(cfg, "report");
    let mut results = Vec::new();
    for spec in &config.audits {
        let path = layout
            .audit_dir(&spec.dataset, spec.config.attribute)
            .join("result.json");
        results.push(crate::audit::AuditResult::read_json(&path)?);
        manifest.input(&path);
    }
    report_into(&results, &layout.tables(), &layout.plots(), &mut manifest)?;
    finish(cfg, manifest)
}

/// Writes every table and plot family for `results`.
pub fn report_into(
    results: &[crate::audit::AuditResult],
    tables_dir: &Path,
    plots_dir: &Path,
    manifest: &mut Manifest,
) -> Result<(), PipelineError> {
    let tables = crate::report::emit_tables(results, tables_dir)?;
    for f in &tables.files {
        manifest.output(f);
    }
    let (plots, skipped) = crate::report::emit_all_plots(results, plots_dir)?;
    for p in &plots {
        manifest.output(p);
    }
    for s in skipped {
        log::warn!("plot skipped: {s}");
        manifest.notes.push(format!("plot skipped: {s}"));
    }
    Ok(())
}

/// Every stage in order.
pub fn run_all(cfg: &LoadedConfig) -> Result<Vec<Manifest>, PipelineError> {
    Ok(vec![
        run_annotate(cfg)?,
        run_balance(cfg)?,
        run_predict(cfg)?,
        run_audits(cfg)?,
        run_report(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_with_defaults_and_resolves_paths() {
        let json = r#"{
            "datasets": [{"name": "pstance", "path": "data/p.csv", "format": "pstance_csv"}],
            "dialect_table": "aae.tsv",
            "backends": [{"kind": "mock_rule", "model": "rule"}],
            "audits": [{"dataset": "pstance", "attribute": "dialect", "per_group_size": 100, "seed": 3, "balance": {"seed": 9}}],
            "output_dir": "out"
        }"#;
        let mut cfg: PipelineConfig = serde_json::from_str(json).unwrap();
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.datasets[0].path, PathBuf::from("/base/data/p.csv"));
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
        let audit = &cfg.audits[0];
        assert_eq!(audit.config.n_samples, 1000);
        assert_eq!(audit.config.seed, 3);
        assert_eq!(audit.balance, Some(BalanceSpec { seed: 9 }));
        assert_eq!(
            cfg.layout().cache,
            PathBuf::from("/base/out/cache.jsonl")
        );
    }

    #[test]
    fn validation_catches_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            datasets: vec![DatasetSpec {
                name: "d".into(),
                path: dir.path().join("missing.csv"),
                format: DatasetFormat::PstanceCsv,
            }],
            dialect_table: None,
            backends: vec![],
            audits: vec![],
            output_dir: dir.path().join("out"),
            cache_path: None,
        };
        let err = cfg.validate(Path::new("cfg.json")).unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn layout_slugs_model_names() {
        let l = Layout {
            root: PathBuf::from("o"),
            cache: PathBuf::from("o/c"),
        };
        assert_eq!(
            l.predictions("pstance", "meta/llama-3 8b"),
            PathBuf::from("o/datasets/pstance/predictions/meta_llama-3_8b.jsonl")
        );
    }
}
