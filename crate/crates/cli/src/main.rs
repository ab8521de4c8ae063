use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use stance_audit::attribute::Attribute;
use stance_audit::audit::{
    run_audit, AuditConfig, AuditResult, GroupMode, NeutralPolicy, PerGroupSize,
};
use stance_audit::corpus::{self, DatasetFormat};
use stance_audit::dialect::{DialectTable, InferenceOptions};
use stance_audit::gateway::{
    read_predictions, run_batch, write_predictions, BackendDescriptor, PredictionCache,
};
use stance_audit::metrics::Metric;
use stance_audit::pipeline::{self, Manifest, PipelineConfig};

#[derive(Parser)]
#[command(name = "stance-audit", version, about = "Audit LLM stance classifiers for dialect and readability bias")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score readability and infer dialect for each record.
    Annotate(AnnotateArgs),
    /// Down-sample the majority group of a two-group attribute.
    Balance(BalanceArgs),
    /// Collect stance predictions from a backend.
    Predict(PredictArgs),
    /// Run the balanced-resampling fairness audit.
    Audit(AuditArgs),
    /// Write tables and plots from audit results.
    Report(ReportArgs),
    /// Run every stage from a config file.
    All(AllArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    /// Pipeline config; annotates every configured dataset.
    #[arg(long, conflicts_with_all = ["input", "out", "format", "dialect_table"])]
    config: Option<PathBuf>,
    #[arg(long = "in", value_name = "FILE", required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "config")]
    out: Option<PathBuf>,
    /// pstance_csv, scd_csv, kemlm_csv or canonical_jsonl.
    #[arg(long, default_value = "canonical_jsonl")]
    format: Option<DatasetFormat>,
    /// Whitespace-separated token table with four weights per row.
    #[arg(long, value_name = "FILE", required_unless_present = "config")]
    dialect_table: Option<PathBuf>,
    /// Fewest in-vocabulary tokens needed for a dialect label.
    #[arg(long)]
    min_in_vocab: Option<usize>,
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long, conflicts_with_all = ["input", "out"])]
    config: Option<PathBuf>,
    #[arg(long = "in", value_name = "FILE", required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "config")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "dialect")]
    attribute: Attribute,
    /// The two groups to balance, majority side second (default: AAE,SAE).
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, conflicts_with_all = ["input", "out", "backend", "model", "cache"])]
    config: Option<PathBuf>,
    #[arg(long = "in", value_name = "FILE", required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE", required_unless_present = "config")]
    out: Option<PathBuf>,
    /// `mock_rule`, or a JSON backend descriptor file.
    #[arg(long, required_unless_present = "config")]
    backend: Option<String>,
    /// Model id; overrides the descriptor's.
    #[arg(long)]
    model: Option<String>,
    /// Response cache file (default: next to --out).
    #[arg(long, value_name = "FILE")]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, conflicts_with_all = ["input", "out", "predictions"])]
    config: Option<PathBuf>,
    /// Annotated corpus.
    #[arg(long = "in", value_name = "FILE", required_unless_present = "config")]
    input: Option<PathBuf>,
    /// Prediction files, one per model.
    #[arg(long, value_name = "FILE", num_args = 1.., required_unless_present = "config")]
    predictions: Vec<PathBuf>,
    /// Result JSON; a CSV is written beside it.
    #[arg(long, value_name = "FILE", required_unless_present = "config")]
    out: Option<PathBuf>,
    #[arg(long, default_value = "dialect")]
    attribute: Attribute,
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n_samples: usize,
    /// Even per-group sample size; defaults to twice the smallest stratum.
    #[arg(long)]
    per_group_size: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "EO,DI,PP")]
    metrics: Vec<Metric>,
    /// one_vs_rest or pairwise.
    #[arg(long, default_value = "one_vs_rest", value_parser = parse_snake::<GroupMode>)]
    group_mode: GroupMode,
    /// not_positive or drop.
    #[arg(long, default_value = "not_positive", value_parser = parse_snake::<NeutralPolicy>)]
    neutral_policy: NeutralPolicy,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, conflicts_with_all = ["input", "out"])]
    config: Option<PathBuf>,
    /// Audit result JSON files.
    #[arg(long = "in", value_name = "FILE", num_args = 1.., required_unless_present = "config")]
    input: Vec<PathBuf>,
    /// Output directory for tables/ and plots/.
    #[arg(long, value_name = "DIR", required_unless_present = "config")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AllArgs {
    #[arg(long)]
    config: PathBuf,
}

fn parse_snake<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Annotate(a) => annotate(a),
        Command::Balance(a) => balance(a),
        Command::Predict(a) => predict(a),
        Command::Audit(a) => audit(a),
        Command::Report(a) => report(a),
        Command::All(a) => {
            let cfg = PipelineConfig::load(&a.config)?;
            for m in pipeline::run_all(&cfg)? {
                log::info!("{} stage wrote {} file(s)", m.subcommand, m.outputs.len());
            }
            Ok(())
        }
    }
}

/// Digest of the command line, for manifests of runs without a config.
fn args_digest() -> String {
    let joined: Vec<String> = std::env::args().skip(1).collect();
    pipeline::digest_hex(joined.join("\0").as_bytes())
}

fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn annotate(a: AnnotateArgs) -> Result<()> {
    if let Some(config) = a.config {
        pipeline::run_annotate(&PipelineConfig::load(config)?)?;
        return Ok(());
    }
    let (input, out, table_path) = (a.input.unwrap(), a.out.unwrap(), a.dialect_table.unwrap());
    let format = a.format.unwrap_or(DatasetFormat::CanonicalJsonl);
    let table = DialectTable::load(&table_path)?;
    let mut options = InferenceOptions::default();
    if let Some(n) = a.min_in_vocab {
        options.min_in_vocab = n;
    }
    let corpus = corpus::load_dataset(&input, format)?;
    let annotated = pipeline::annotate_corpus(corpus, &table, &options)?;
    create_parent(&out)?;
    corpus::write_canonical(&annotated.corpus, &out)?;

    let mut manifest = Manifest::new("annotate", args_digest());
    manifest.input(&input);
    manifest.input(&table_path);
    manifest.output(&out);
    if !annotated.skipped.is_empty() {
        manifest.notes.push(format!(
            "{} record(s) without word tokens left out",
            annotated.skipped.len()
        ));
    }
    manifest.write(&manifest_path(&out))?;
    Ok(())
}

fn two_groups(attribute: Attribute, groups: &[String]) -> Result<(String, String)> {
    let groups = if groups.is_empty() {
        attribute.default_groups()
    } else {
        groups.to_vec()
    };
    if groups.len() != 2 {
        bail!("balancing needs exactly two groups, got {}", groups.len());
    }
    let canon = |g: &str| {
        attribute
            .canonical_group(g)
            .map(str::to_string)
            .with_context(|| format!("{g:?} is not a {attribute} group"))
    };
    Ok((canon(&groups[0])?, canon(&groups[1])?))
}

fn balance(a: BalanceArgs) -> Result<()> {
    if let Some(config) = a.config {
        pipeline::run_balance(&PipelineConfig::load(config)?)?;
        return Ok(());
    }
    let (input, out) = (a.input.unwrap(), a.out.unwrap());
    let (group_a, group_b) = two_groups(a.attribute, &a.groups)?;
    let corpus = corpus::load_dataset(&input, DatasetFormat::CanonicalJsonl)?;
    let balanced = pipeline::balance_by_attribute(&corpus, a.attribute, &group_a, &group_b, a.seed)?;
    create_parent(&out)?;
    corpus::write_canonical(&balanced, &out)?;

    let mut manifest = Manifest::new("balance", args_digest());
    manifest.seeds.insert("balance".into(), a.seed);
    manifest.input(&input);
    manifest.output(&out);
    manifest.write(&manifest_path(&out))?;
    Ok(())
}

fn backend_descriptor(spec: &str, model: Option<String>) -> Result<BackendDescriptor> {
    let mut descriptor = if spec == "mock_rule" {
        BackendDescriptor::mock_rule("mock-rule")
    } else {
        let path = Path::new(spec);
        if !path.is_file() {
            bail!("--backend must be `mock_rule` or a descriptor file; {spec:?} is neither");
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        serde_json::from_str(&text).with_context(|| format!("parsing backend descriptor {spec}"))?
    };
    if let Some(m) = model {
        descriptor.model = m;
    }
    descriptor.validate()?;
    Ok(descriptor)
}

fn predict(a: PredictArgs) -> Result<()> {
    if let Some(config) = a.config {
        pipeline::run_predict(&PipelineConfig::load(config)?)?;
        return Ok(());
    }
    let (input, out) = (a.input.unwrap(), a.out.unwrap());
    let descriptor = backend_descriptor(&a.backend.unwrap(), a.model)?;
    let corpus = corpus::load_dataset(&input, DatasetFormat::CanonicalJsonl)?;
    let cache_path = a
        .cache
        .unwrap_or_else(|| out.with_file_name("cache.jsonl"));
    create_parent(&out)?;
    let cache = PredictionCache::open(&cache_path)?;
    let backend = descriptor.build()?;
    let outcome = run_batch(corpus.records(), backend.as_ref(), &cache, (&descriptor).into())?;
    write_predictions(outcome.predictions.values(), &out)?;
    log::info!(
        "{} predictions, {} cache hits, {} failures",
        outcome.predictions.len(),
        outcome.cache_hits,
        outcome.failures.len()
    );

    let mut manifest = Manifest::new("predict", args_digest());
    manifest.input(&input);
    manifest.output(&out);
    manifest.output(&cache_path);
    manifest.notes.extend(descriptor.decoding_note());
    for (id, error) in &outcome.failures {
        manifest.notes.push(format!("record {id} failed: {error}"));
    }
    manifest.write(&manifest_path(&out))?;
    if !outcome.failures.is_empty() {
        eprintln!(
            "warning: {} record(s) have no prediction; see {}",
            outcome.failures.len(),
            manifest_path(&out).display()
        );
    }
    Ok(())
}

fn audit(a: AuditArgs) -> Result<()> {
    if let Some(config) = a.config {
        pipeline::run_audits(&PipelineConfig::load(config)?)?;
        return Ok(());
    }
    let (input, out) = (a.input.unwrap(), a.out.unwrap());
    let corpus = corpus::load_dataset(&input, DatasetFormat::CanonicalJsonl)?;
    let mut predictions = BTreeMap::new();
    for path in &a.predictions {
        let preds = read_predictions(path)?;
        let Some(model) = preds.values().next().map(|p| p.model_id.clone()) else {
            bail!("{} holds no predictions", path.display());
        };
        if predictions.insert(model.clone(), preds).is_some() {
            bail!("model {model:?} appears in more than one prediction file");
        }
    }
    let mut config = AuditConfig::new(a.attribute);
    config.groups = a.groups;
    config.seed = a.seed;
    config.n_samples = a.n_samples;
    if let Some(n) = a.per_group_size {
        config.per_group_size = PerGroupSize::Fixed(n);
    }
    config.metrics = a.metrics;
    config.group_mode = a.group_mode;
    config.neutral_policy = a.neutral_policy;
    let result = run_audit(&corpus, &predictions, &config)?;
    create_parent(&out)?;
    result.write_json(&out)?;
    let csv = out.with_extension("csv");
    result.write_csv(&csv)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let mut manifest = Manifest::new("audit", args_digest());
    manifest.seeds.insert("audit".into(), a.seed);
    manifest.input(&input);
    for p in &a.predictions {
        manifest.input(p);
    }
    manifest.output(&out);
    manifest.output(&csv);
    manifest.notes = result.warnings.clone();
    manifest.write(&manifest_path(&out))?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    if let Some(config) = a.config {
        pipeline::run_report(&PipelineConfig::load(config)?)?;
        return Ok(());
    }
    let out = a.out.unwrap();
    let results = a
        .input
        .iter()
        .map(|p| AuditResult::read_json(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest::new("report", args_digest());
    for p in &a.input {
        manifest.input(p);
    }
    pipeline::report_into(&results, &out.join("tables"), &out.join("plots"), &mut manifest)?;
    manifest.write(&out.join("manifest.json"))?;
    Ok(())
}
