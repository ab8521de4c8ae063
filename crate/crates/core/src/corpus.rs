//! Stance corpora: loading, canonical JSONL persistence, annotation joins
//! and two-group balancing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialect::DialectAnnotation;
use crate::readability::ReadabilityAnnotation;
use crate::stance::Stance;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required column {column:?}")]
    MissingColumn { column: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("unknown dataset format {0:?}")]
    UnknownFormat(String),
    #[error("balance error: {0}")]
    Balance(String),
    #[error("no annotation for {} record(s): {}", .missing.len(), .missing.join(", "))]
    Join { missing: Vec<String> },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Readability and dialect attributes attached to a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeAnnotation {
    pub readability: ReadabilityAnnotation,
    pub dialect: DialectAnnotation,
}

/// One corpus item. The canonical JSONL line carries `id`, `text`, `target`,
/// `stance` and `dataset`, plus `readability`/`dialect` once annotated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceRecord {
    pub id: String,
    pub text: String,
    pub target: String,
    #[serde(rename = "stance")]
    pub gold_stance: Stance,
    #[serde(rename = "dataset")]
    pub dataset_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readability: Option<ReadabilityAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<DialectAnnotation>,
}

impl StanceRecord {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        target: impl Into<String>,
        gold_stance: Stance,
        dataset_tag: impl Into<String>,
    ) -> Self {
        StanceRecord {
            id: id.into(),
            text: text.into(),
            target: target.into(),
            gold_stance,
            dataset_tag: dataset_tag.into(),
            readability: None,
            dialect: None,
        }
    }

    pub fn is_annotated(&self) -> bool {
        self.readability.is_some() && self.dialect.is_some()
    }
}

/// Ordered, id-unique collection of records. Iteration follows load order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    records: Vec<StanceRecord>,
    by_target: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn new(records: Vec<StanceRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut by_target: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
            if r.text.trim().is_empty() {
                return Err(CorpusError::Row {
                    row: i + 1,
                    message: format!("record {:?} has empty text", r.id),
                });
            }
            by_target.entry(r.target.clone()).or_default().push(i);
        }
        Ok(Corpus { records, by_target })
    }

    pub fn records(&self) -> &[StanceRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<StanceRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StanceRecord> {
        self.records.iter()
    }

    /// Targets in sorted order.
    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.by_target.keys().map(String::as_str)
    }

    /// Records for one target, in corpus order.
    pub fn for_target<'a>(&'a self, target: &str) -> impl Iterator<Item = &'a StanceRecord> + 'a {
        self.by_target
            .get(target)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    pub fn get(&self, id: &str) -> Option<&StanceRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a StanceRecord;
    type IntoIter = std::slice::Iter<'a, StanceRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    PstanceCsv,
    ScdCsv,
    KemlmCsv,
    CanonicalJsonl,
}

impl DatasetFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetFormat::PstanceCsv => "pstance_csv",
            DatasetFormat::ScdCsv => "scd_csv",
            DatasetFormat::KemlmCsv => "kemlm_csv",
            DatasetFormat::CanonicalJsonl => "canonical_jsonl",
        }
    }

    /// Column layout for the CSV formats; `None` for canonical JSONL.
    pub fn profile(self) -> Option<CsvProfile> {
        match self {
            DatasetFormat::PstanceCsv => Some(CsvProfile {
                dataset_tag: "pstance".into(),
                id_column: None,
                text_column: "Tweet".into(),
                target_column: "Target".into(),
                stance_column: "Stance".into(),
            }),
            DatasetFormat::ScdCsv => Some(CsvProfile {
                dataset_tag: "scd".into(),
                id_column: Some("id".into()),
                text_column: "text".into(),
                target_column: "target".into(),
                stance_column: "stance".into(),
            }),
            DatasetFormat::KemlmCsv => Some(CsvProfile {
                dataset_tag: "kemlm".into(),
                id_column: Some("tweet_id".into()),
                text_column: "text".into(),
                target_column: "target".into(),
                stance_column: "label".into(),
            }),
            DatasetFormat::CanonicalJsonl => None,
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pstance_csv" => Ok(DatasetFormat::PstanceCsv),
            "scd_csv" => Ok(DatasetFormat::ScdCsv),
            "kemlm_csv" => Ok(DatasetFormat::KemlmCsv),
            "canonical_jsonl" => Ok(DatasetFormat::CanonicalJsonl),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// Header names for one CSV source. Matching is case-insensitive. An absent
/// id column means ids are synthesized as `dataset_tag:row`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvProfile {
    pub dataset_tag: String,
    pub id_column: Option<String>,
    pub text_column: String,
    pub target_column: String,
    pub stance_column: String,
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Reads CSV with the given profile. Row numbers in errors and synthesized
/// ids count data rows from 1.
pub fn read_csv<R: std::io::Read>(reader: R, profile: &CsvProfile) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let csv_err = |e: csv::Error| CorpusError::Row {
        row: e.position().map_or(0, |p| p.record() as usize),
        message: e.to_string(),
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let require = |name: &str| {
        find_column(&headers, name).ok_or_else(|| CorpusError::MissingColumn {
            column: name.to_string(),
        })
    };
    let text_col = require(&profile.text_column)?;
    let target_col = require(&profile.target_column)?;
    let stance_col = require(&profile.stance_column)?;
    let id_col = profile
        .id_column
        .as_deref()
        .and_then(|name| find_column(&headers, name));

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(csv_err)?;
        let field = |col: usize| row.get(col).unwrap_or("");
        let raw_stance = field(stance_col);
        let gold_stance = raw_stance.parse::<Stance>().map_err(|_| CorpusError::Row {
            row: row_no,
            message: format!("unknown stance value {raw_stance:?}"),
        })?;
        let text = field(text_col);
        if text.trim().is_empty() {
            return Err(CorpusError::Row {
                row: row_no,
                message: "empty text".into(),
            });
        }
        let id = match id_col.map(field).map(str::trim) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => format!("{}:{}", profile.dataset_tag, row_no),
        };
        records.push(StanceRecord::new(
            id,
            text,
            field(target_col),
            gold_stance,
            profile.dataset_tag.clone(),
        ));
    }
    Corpus::new(records)
}

#[derive(Deserialize)]
struct CanonicalLine {
    id: Option<String>,
    text: Option<String>,
    target: Option<String>,
    stance: Option<String>,
    dataset: Option<String>,
    #[serde(default)]
    readability: Option<ReadabilityAnnotation>,
    #[serde(default)]
    dialect: Option<DialectAnnotation>,
}

/// Reads canonical JSONL. Blank lines are skipped; row numbers are line numbers.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| CorpusError::Row {
            row,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CanonicalLine = serde_json::from_str(&line).map_err(|e| CorpusError::Row {
            row,
            message: e.to_string(),
        })?;
        let text = parsed.text.ok_or(CorpusError::MissingColumn {
            column: "text".into(),
        })?;
        let target = parsed.target.ok_or(CorpusError::MissingColumn {
            column: "target".into(),
        })?;
        let raw_stance = parsed.stance.ok_or(CorpusError::MissingColumn {
            column: "stance".into(),
        })?;
        let gold_stance = raw_stance.parse::<Stance>().map_err(|_| CorpusError::Row {
            row,
            message: format!("unknown stance value {raw_stance:?}"),
        })?;
        if text.trim().is_empty() {
            return Err(CorpusError::Row {
                row,
                message: "empty text".into(),
            });
        }
        let dataset_tag = parsed.dataset.unwrap_or_else(|| "canonical".into());
        let id = parsed
            .id
            .filter(|id| !id.trim().is_empty())
            .unwrap_or_else(|| format!("{dataset_tag}:{row}"));
        records.push(StanceRecord {
            id,
            text,
            target,
            gold_stance,
            dataset_tag,
            readability: parsed.readability,
            dialect: parsed.dialect,
        });
    }
    Corpus::new(records)
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    match format.profile() {
        Some(profile) => read_csv(file, &profile),
        None => read_jsonl(BufReader::new(file)),
    }
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for record in corpus {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_canonical(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_jsonl(corpus, BufWriter::new(file)).map_err(|e| CorpusError::io(path, e))
}

/// Attaches annotations by record id, keeping corpus order.
pub fn attach_annotations(
    corpus: Corpus,
    annotations: &HashMap<String, AttributeAnnotation>,
) -> Result<Corpus, CorpusError> {
    let missing: Vec<String> = corpus
        .iter()
        .filter(|r| !annotations.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::Join { missing });
    }
    let records = corpus
        .into_records()
        .into_iter()
        .map(|mut r| {
            let ann = &annotations[&r.id];
            r.readability = Some(ann.readability.clone());
            r.dialect = Some(ann.dialect.clone());
            r
        })
        .collect();
    Corpus::new(records)
}

/// Side of a two-group split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Down-samples the larger group to the size of the smaller one, matching
/// the smaller group's Favor count (rounded to the nearest integer).
///
/// Records for which `group_of` returns `None` are left out. The smaller
/// group is kept whole; on equal sizes group B is the one down-sampled.
/// Within each (group, stance) stratum the selection is uniform under
/// `seed`, and the output keeps corpus order.
pub fn balance_two_group<F>(corpus: &Corpus, group_of: F, seed: u64) -> Result<Corpus, CorpusError>
where
    F: Fn(&StanceRecord) -> Option<Side>,
{
    let mut strata: HashMap<(Side, Stance), Vec<usize>> = HashMap::new();
    let mut sizes: HashMap<Side, usize> = HashMap::new();
    for (i, r) in corpus.iter().enumerate() {
        if let Some(side) = group_of(r) {
            strata.entry((side, r.gold_stance)).or_default().push(i);
            *sizes.entry(side).or_default() += 1;
        }
    }
    for side in [Side::A, Side::B] {
        if sizes.get(&side).copied().unwrap_or(0) == 0 {
            return Err(CorpusError::Balance(format!("group {side} is empty")));
        }
    }
    let (minority, majority) = if sizes[&Side::A] <= sizes[&Side::B] {
        (Side::A, Side::B)
    } else {
        (Side::B, Side::A)
    };
    let size = sizes[&minority];
    let stratum_len = |side: Side, stance: Stance| strata.get(&(side, stance)).map_or(0, Vec::len);

    for stance in Stance::ALL {
        let in_minority = stratum_len(minority, stance) > 0;
        let in_majority = stratum_len(majority, stance) > 0;
        if in_minority != in_majority {
            let lacking = if in_minority { majority } else { minority };
            return Err(CorpusError::Balance(format!(
                "group {lacking} has no {stance} records while the other group does"
            )));
        }
    }

    let favor_ratio = stratum_len(minority, Stance::Favor) as f64 / size as f64;
    let favor_target = (favor_ratio * size as f64).round() as usize;
    let wanted = [
        (Stance::Favor, favor_target),
        (Stance::Against, size - favor_target),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: HashSet<usize> = HashSet::with_capacity(2 * size);
    for stance in Stance::ALL {
        keep.extend(strata.get(&(minority, stance)).into_iter().flatten().copied());
    }
    for (stance, want) in wanted {
        let pool = strata.get(&(majority, stance)).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < want {
            return Err(CorpusError::Balance(format!(
                "group {majority} {stance} stratum has {} record(s), {want} needed",
                pool.len()
            )));
        }
        keep.extend(index::sample(&mut rng, pool.len(), want).into_iter().map(|j| pool[j]));
    }

    let records = corpus
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    Corpus::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSTANCE: &str = "Tweet,Target,Stance\n\"I love him, really\",Bernie Sanders,FAVOR\nNo way,Donald Trump,against\n";

    fn pstance_profile() -> CsvProfile {
        DatasetFormat::PstanceCsv.profile().unwrap()
    }

    #[test]
    fn reads_two_valid_rows() {
        let c = read_csv(PSTANCE.as_bytes(), &pstance_profile()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.records()[0].text, "I love him, really");
        assert_eq!(c.records()[0].gold_stance, Stance::Favor);
        assert_eq!(c.records()[1].gold_stance, Stance::Against);
        assert_eq!(c.records()[0].id, "pstance:1");
        assert_eq!(c.records()[1].id, "pstance:2");
    }

    #[test]
    fn header_only_is_empty() {
        let c = read_csv("Tweet,Target,Stance\n".as_bytes(), &pstance_profile()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn none_stance_is_a_row_error() {
        let src = "Tweet,Target,Stance\nok,X,FAVOR\nmeh,X,NONE\n";
        let err = read_csv(src.as_bytes(), &pstance_profile()).unwrap_err();
        match err {
            CorpusError::Row { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("NONE"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_csv("Tweet,Stance\nhi,FAVOR\n".as_bytes(), &pstance_profile()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn { column } if column == "Target"));
    }

    #[test]
    fn explicit_ids_are_used_and_must_be_unique() {
        let profile = DatasetFormat::KemlmCsv.profile().unwrap();
        let src = "tweet_id,text,target,label\n11,a b,Joe Biden,FAVOR\n12,c d,Joe Biden,AGAINST\n";
        let c = read_csv(src.as_bytes(), &profile).unwrap();
        assert_eq!(c.records()[1].id, "12");
        let dup = "tweet_id,text,target,label\n11,a,Joe Biden,FAVOR\n11,b,Joe Biden,AGAINST\n";
        assert!(matches!(
            read_csv(dup.as_bytes(), &profile),
            Err(CorpusError::DuplicateId(id)) if id == "11"
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset("/nonexistent/file.csv", DatasetFormat::PstanceCsv).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn jsonl_requires_core_keys() {
        let err = read_jsonl(r#"{"id":"1","text":"x","stance":"FAVOR"}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn { column } if column == "target"));
    }

    #[test]
    fn per_target_index_follows_load_order() {
        let src = "Tweet,Target,Stance\na,T1,FAVOR\nb,T2,FAVOR\nc,T1,AGAINST\n";
        let c = read_csv(src.as_bytes(), &pstance_profile()).unwrap();
        let t1: Vec<&str> = c.for_target("T1").map(|r| r.text.as_str()).collect();
        assert_eq!(t1, vec!["a", "c"]);
        assert_eq!(c.targets().collect::<Vec<_>>(), vec!["T1", "T2"]);
    }

    fn record(id: usize, stance: Stance) -> StanceRecord {
        StanceRecord::new(format!("r{id}"), "some text", "T", stance, "test")
    }

    #[test]
    fn annotation_join_reports_missing_ids() {
        let c = Corpus::new((0..3).map(|i| record(i, Stance::Favor)).collect()).unwrap();
        let ann = AttributeAnnotation {
            readability: crate::readability::flesch_score("some text").unwrap(),
            dialect: DialectAnnotation {
                theta: None,
                label: crate::dialect::DialectLabel::Unknown,
                in_vocab: 0,
            },
        };
        let mut map: HashMap<String, AttributeAnnotation> =
            (0..3).map(|i| (format!("r{i}"), ann.clone())).collect();
        let joined = attach_annotations(c.clone(), &map).unwrap();
        assert_eq!(joined.len(), 3);
        assert!(joined.iter().all(StanceRecord::is_annotated));
        assert_eq!(
            joined.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
            vec!["r0", "r1", "r2"]
        );

        map.remove("r1");
        match attach_annotations(c, &map) {
            Err(CorpusError::Join { missing }) => assert_eq!(missing, vec!["r1".to_string()]),
            other => panic!("unexpected {other:?}"),
        }

        let empty = attach_annotations(Corpus::default(), &HashMap::new()).unwrap();
        assert!(empty.is_empty());
    }

    fn sided(n_a: (usize, usize), n_b: (usize, usize)) -> (Corpus, HashMap<String, Side>) {
        let mut records = Vec::new();
        let mut sides = HashMap::new();
        let mut push = |side: Side, stance: Stance, n: usize| {
            for _ in 0..n {
                let r = record(records.len(), stance);
                sides.insert(r.id.clone(), side);
                records.push(r);
            }
        };
        push(Side::A, Stance::Favor, n_a.0);
        push(Side::A, Stance::Against, n_a.1);
        push(Side::B, Stance::Favor, n_b.0);
        push(Side::B, Stance::Against, n_b.1);
        (Corpus::new(records).unwrap(), sides)
    }

    #[test]
    fn balance_downsamples_majority() {
        let (c, sides) = sided((600, 400), (30, 70));
        let out = balance_two_group(&c, |r| sides.get(&r.id).copied(), 9).unwrap();
        let count = |side, stance| {
            out.iter()
                .filter(|r| sides[&r.id] == side && r.gold_stance == stance)
                .count()
        };
        assert_eq!(count(Side::A, Stance::Favor), 30);
        assert_eq!(count(Side::A, Stance::Against), 70);
        assert_eq!(count(Side::B, Stance::Favor), 30);
        assert_eq!(count(Side::B, Stance::Against), 70);
    }

    #[test]
    fn balanced_input_is_returned_whole() {
        let (c, sides) = sided((5, 5), (5, 5));
        let out = balance_two_group(&c, |r| sides.get(&r.id).copied(), 1).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn empty_group_is_rejected() {
        let (c, sides) = sided((5, 5), (0, 0));
        let err = balance_two_group(&c, |r| sides.get(&r.id).copied(), 1).unwrap_err();
        assert!(matches!(err, CorpusError::Balance(msg) if msg.contains("group B is empty")));
    }

    #[test]
    fn missing_stance_stratum_is_named() {
        let (c, sides) = sided((50, 50), (0, 10));
        let err = balance_two_group(&c, |r| sides.get(&r.id).copied(), 1).unwrap_err();
        assert!(matches!(err, CorpusError::Balance(msg) if msg.contains("group B has no FAVOR")));
    }

    #[test]
    fn infeasible_majority_stratum_is_reported() {
        let (c, sides) = sided((2, 98), (8, 2));
        let err = balance_two_group(&c, |r| sides.get(&r.id).copied(), 1).unwrap_err();
        assert!(matches!(err, CorpusError::Balance(msg) if msg.contains("group A FAVOR stratum")));
    }

    #[test]
    fn ungrouped_records_are_dropped() {
        let (c, sides) = sided((5, 5), (5, 5));
        let out = balance_two_group(
            &c,
            |r| if r.id == "r0" { None } else { sides.get(&r.id).copied() },
            1,
        )
        .unwrap();
        // Group A shrinks to 4 Favor + 5 Against; B follows.
        assert_eq!(out.len(), 18);
        assert!(out.get("r0").is_none());
    }
}
