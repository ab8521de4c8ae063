#![allow(dead_code)]

use std::collections::BTreeMap;

use stance_audit::attribute::Attribute;
use stance_audit::audit::{
    AuditMetadata, AuditResult, GroupMode, MetricCell, ModelSummary, NeutralPolicy, PerGroupSize,
    TargetFrameInfo,
};
use stance_audit::dialect::{DialectAnnotation, DialectLabel};
use stance_audit::gateway::{
    run_batch, BackendDescriptor, BatchOptions, PredictionCache, StancePrediction,
};
use stance_audit::metrics::Metric;
use stance_audit::readability::{ReadabilityAnnotation, ReadabilityClass};
use stance_audit::{AttributeAnnotation, Corpus, Direction, Stance, StanceRecord};

pub fn readability_annotation(class: ReadabilityClass) -> ReadabilityAnnotation {
    let score = match class {
        ReadabilityClass::Easy => 90.0,
        ReadabilityClass::Medium => 70.0,
        ReadabilityClass::Difficult => 45.0,
        ReadabilityClass::VeryDifficult => 10.0,
    };
    ReadabilityAnnotation {
        words: 10,
        sentences: 1,
        syllables: 14,
        score,
        class,
    }
}

pub fn dialect_annotation(label: DialectLabel) -> DialectAnnotation {
    let theta = match label {
        DialectLabel::Aae => Some([0.7, 0.1, 0.1, 0.1]),
        DialectLabel::Hispanic => Some([0.1, 0.7, 0.1, 0.1]),
        DialectLabel::Asian => Some([0.1, 0.1, 0.7, 0.1]),
        DialectLabel::Sae => Some([0.1, 0.1, 0.1, 0.7]),
        DialectLabel::Unknown => None,
    };
    DialectAnnotation {
        theta,
        label,
        in_vocab: if theta.is_some() { 5 } else { 0 },
    }
}

pub fn annotated(
    id: impl Into<String>,
    target: &str,
    stance: Stance,
    dialect: DialectLabel,
    class: ReadabilityClass,
) -> StanceRecord {
    let id = id.into();
    let mut r = StanceRecord::new(
        id.clone(),
        format!("statement {id} about {target}"),
        target,
        stance,
        "synthetic",
    );
    r.readability = Some(readability_annotation(class));
    r.dialect = Some(dialect_annotation(dialect));
    r
}

/// `per_stratum` records for each of AAE/SAE × Favor/Against and target.
pub fn dialect_corpus(per_stratum: usize, targets: &[&str]) -> Corpus {
    let mut records = Vec::new();
    for target in targets {
        for label in [DialectLabel::Aae, DialectLabel::Sae] {
            for stance in Stance::ALL {
                for i in 0..per_stratum {
                    records.push(annotated(
                        format!("{target}-{label}-{stance}-{i}"),
                        target,
                        stance,
                        label,
                        ReadabilityClass::Medium,
                    ));
                }
            }
        }
    }
    Corpus::new(records).unwrap()
}

/// `per_stratum` records for each readability class × stance and target.
pub fn readability_corpus(per_stratum: usize, targets: &[&str]) -> Corpus {
    let mut records = Vec::new();
    for target in targets {
        for class in ReadabilityClass::ALL {
            for stance in Stance::ALL {
                for i in 0..per_stratum {
                    records.push(annotated(
                        format!("{target}-{class}-{stance}-{i}"),
                        target,
                        stance,
                        DialectLabel::Sae,
                        class,
                    ));
                }
            }
        }
    }
    Corpus::new(records).unwrap()
}

pub fn predict(
    corpus: &Corpus,
    descriptor: &BackendDescriptor,
) -> BTreeMap<String, StancePrediction> {
    let backend = descriptor.build().unwrap();
    let outcome = run_batch(
        corpus.records(),
        backend.as_ref(),
        &PredictionCache::in_memory(),
        BatchOptions::from(descriptor),
    )
    .unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    outcome.predictions
}

pub fn cell(
    target: &str,
    model: &str,
    metric: Metric,
    group: &str,
    direction: Direction,
    mean: f64,
    sd: f64,
) -> MetricCell {
    MetricCell {
        target: target.into(),
        model: model.into(),
        metric,
        group: group.into(),
        direction,
        mean: Some(mean),
        sd: Some(sd),
        n_samples: 10,
        n_undefined: 0,
        degenerate: false,
    }
}

pub fn summary(model: &str, f1: f64, neutral: f64) -> ModelSummary {
    ModelSummary {
        model: model.into(),
        weighted_f1: Some(f1),
        neutral_rate: Some(neutral),
        mean_abs_eo: None,
        n_predictions: 100,
    }
}

pub fn hand_result(
    dataset: &str,
    attribute: Attribute,
    groups: &[&str],
    targets: &[&str],
    models: Vec<ModelSummary>,
    cells: Vec<MetricCell>,
) -> AuditResult {
    AuditResult {
        metadata: AuditMetadata {
            dataset: dataset.into(),
            attribute,
            groups: groups.iter().map(|g| g.to_string()).collect(),
            n_samples: 10,
            seed: 1,
            per_group_size: PerGroupSize::Fixed(20),
            group_mode: GroupMode::OneVsRest,
            neutral_policy: NeutralPolicy::NotPositive,
            directions: Direction::BOTH.to_vec(),
            targets: targets
                .iter()
                .map(|t| TargetFrameInfo {
                    target: t.to_string(),
                    per_group_size: 20,
                    frame_records: 40,
                    sample_stream_digest: "0".repeat(64),
                })
                .collect(),
        },
        cells,
        models,
        warnings: Vec::new(),
    }
}

/// A complete EO result: every model × group × direction gets a cell.
pub fn eo_result(
    dataset: &str,
    target: &str,
    models: &[&str],
    value: impl Fn(&str, &str, Direction) -> (f64, f64),
) -> AuditResult {
    let groups = ["AAE", "SAE"];
    let mut cells = Vec::new();
    for m in models {
        for d in Direction::BOTH {
            for g in groups {
                let (mean, sd) = value(m, g, d);
                cells.push(cell(target, m, Metric::EqualOpportunity, g, d, mean, sd));
            }
        }
    }
    hand_result(
        dataset,
        Attribute::Dialect,
        &groups,
        &[target],
        models.iter().map(|m| summary(m, 0.8, 5.0)).collect(),
        cells,
    )
}

pub fn annotation_for(r: &StanceRecord) -> AttributeAnnotation {
    AttributeAnnotation {
        readability: r.readability.clone().unwrap(),
        dialect: r.dialect.clone().unwrap(),
    }
}

pub fn golden_result() -> AuditResult {
    eo_result("golden", "T", &["alpha", "beta"], |m, g, d| {
        let base = if g == "AAE" { 0.125 } else { -0.125 };
        let sign = if d == Direction::FavorAsPositive { 1.0 } else { -1.0 };
        let scale = if m == "alpha" { 1.0 } else { 0.5 };
        (base * sign * scale, 0.0625 * scale)
    })
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (set UPDATE_GOLDEN=1 to create)", path.display()));
    assert_eq!(actual, expected, "{name} drifted from its golden copy");
}
