//! Flesch reading-ease scoring and its four-band discretization.
//!
//! `score = 206.835 - 1.015 * (W / Se) - 84.6 * (Sy / W)` with `W` words,
//! `Se` sentences and `Sy` syllables. Higher scores read more easily. The
//! score is never clamped: very short or very dense texts legitimately land
//! above 100 or below 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

const BASE: f64 = 206.835;
const SENTENCE_LENGTH_WEIGHT: f64 = 1.015;
const SYLLABLE_WEIGHT: f64 = 84.6;

#[derive(Debug, Error, PartialEq)]
pub enum ReadabilityError {
    #[error("token {0:?} has no alphabetic character")]
    NotAWord(String),
    #[error("text contains no word tokens")]
    NoWords,
    #[error("score {0} is not finite")]
    NonFinite(f64),
    #[error("unknown readability class {0:?}")]
    UnknownClass(String),
}

/// Reading-ease band. Figures elsewhere call these low, medium, high and
/// very high complexity; `FromStr` accepts both vocabularies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReadabilityClass {
    Easy,
    Medium,
    Difficult,
    VeryDifficult,
}

impl ReadabilityClass {
    pub const ALL: [ReadabilityClass; 4] = [
        ReadabilityClass::Easy,
        ReadabilityClass::Medium,
        ReadabilityClass::Difficult,
        ReadabilityClass::VeryDifficult,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReadabilityClass::Easy => "Easy",
            ReadabilityClass::Medium => "Medium",
            ReadabilityClass::Difficult => "Difficult",
            ReadabilityClass::VeryDifficult => "VeryDifficult",
        }
    }

    /// The complexity-scale name for this band.
    pub fn complexity_alias(self) -> &'static str {
        match self {
            ReadabilityClass::Easy => "Low",
            ReadabilityClass::Medium => "Medium",
            ReadabilityClass::Difficult => "High",
            ReadabilityClass::VeryDifficult => "VeryHigh",
        }
    }
}

impl fmt::Display for ReadabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReadabilityClass {
    type Err = ReadabilityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "easy" | "low" => Ok(ReadabilityClass::Easy),
            "medium" => Ok(ReadabilityClass::Medium),
            "difficult" | "high" => Ok(ReadabilityClass::Difficult),
            "verydifficult" | "veryhigh" => Ok(ReadabilityClass::VeryDifficult),
            _ => Err(ReadabilityError::UnknownClass(s.to_string())),
        }
    }
}

/// Counts and score for one text. Serialized under the `readability` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityAnnotation {
    #[serde(rename = "w")]
    pub words: usize,
    #[serde(rename = "se")]
    pub sentences: usize,
    #[serde(rename = "sy")]
    pub syllables: usize,
    pub score: f64,
    pub class: ReadabilityClass,
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Rule-based syllable count: maximal vowel groups over `aeiouy`, minus one
/// for a silent terminal consonant+`e` (but not `-le`), floored at one.
pub fn count_syllables(word: &str) -> Result<usize, ReadabilityError> {
    if !word.chars().any(char::is_alphabetic) {
        return Err(ReadabilityError::NotAWord(word.to_string()));
    }
    let folded: Vec<char> = deunicode::deunicode(word)
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect();

    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &folded {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }

    let n = folded.len();
    if n >= 2 && folded[n - 1] == 'e' {
        let before = folded[n - 2];
        if !is_vowel(before) && before != 'l' {
            groups = groups.saturating_sub(1);
        }
    }
    Ok(groups.max(1))
}

/// Reading-ease score from raw counts. `words` and `sentences` must be non-zero.
pub fn score_from_counts(words: usize, sentences: usize, syllables: usize) -> f64 {
    let w = words as f64;
    let se = sentences as f64;
    let sy = syllables as f64;
    BASE - SENTENCE_LENGTH_WEIGHT * (w / se) - SYLLABLE_WEIGHT * (sy / w)
}

/// Bands: `>= 80` Easy, `[60, 80)` Medium, `[30, 60)` Difficult, `< 30` VeryDifficult.
pub fn readability_class(score: f64) -> Result<ReadabilityClass, ReadabilityError> {
    if !score.is_finite() {
        return Err(ReadabilityError::NonFinite(score));
    }
    Ok(if score >= 80.0 {
        ReadabilityClass::Easy
    } else if score >= 60.0 {
        ReadabilityClass::Medium
    } else if score >= 30.0 {
        ReadabilityClass::Difficult
    } else {
        ReadabilityClass::VeryDifficult
    })
}

/// Scores a text. Sentences end at `.`, `!` or `?`; a trailing fragment
/// without a terminator still counts when it contains a word.
pub fn flesch_score(text: &str) -> Result<ReadabilityAnnotation, ReadabilityError> {
    let mut words = 0usize;
    let mut syllables = 0usize;
    let mut sentences = 0usize;
    let mut open_sentence = false;

    for token in text::tokens(text) {
        if token.is_word() {
            words += 1;
            syllables += count_syllables(token.word)?;
            open_sentence = true;
        }
        if token.ends_sentence && open_sentence {
            sentences += 1;
            open_sentence = false;
        }
    }
    if open_sentence {
        sentences += 1;
    }
    if words == 0 {
        return Err(ReadabilityError::NoWords);
    }
    let sentences = sentences.max(1);
    let score = score_from_counts(words, sentences, syllables);
    Ok(ReadabilityAnnotation {
        words,
        sentences,
        syllables,
        score,
        class: readability_class(score)?,
    })
}
