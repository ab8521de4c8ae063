//! Stance labels shared across the corpus, gateway and metric layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Gold stance of a corpus record. Source datasets are binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Stance {
    Favor,
    Against,
}

impl Stance {
    pub const ALL: [Stance; 2] = [Stance::Favor, Stance::Against];

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Favor => "FAVOR",
            Stance::Against => "AGAINST",
        }
    }

    pub fn flipped(self) -> Stance {
        match self {
            Stance::Favor => Stance::Against,
            Stance::Against => Stance::Favor,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStance(pub String);

impl fmt::Display for UnknownStance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown stance value {:?}", self.0)
    }
}

impl std::error::Error for UnknownStance {}

impl FromStr for Stance {
    type Err = UnknownStance;

    /// Case-insensitive; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("favor") {
            Ok(Stance::Favor)
        } else if t.eq_ignore_ascii_case("against") {
            Ok(Stance::Against)
        } else {
            Err(UnknownStance(s.to_string()))
        }
    }
}

/// A model's parsed answer. Anything other than an exact FAVOR/AGAINST is `Neutral`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PredictedStance {
    Favor,
    Against,
    Neutral,
}

impl PredictedStance {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictedStance::Favor => "FAVOR",
            PredictedStance::Against => "AGAINST",
            PredictedStance::Neutral => "NEUTRAL",
        }
    }

    pub fn is_neutral(self) -> bool {
        self == PredictedStance::Neutral
    }

    /// True when the prediction names exactly `stance`.
    pub fn matches(self, stance: Stance) -> bool {
        matches!(
            (self, stance),
            (PredictedStance::Favor, Stance::Favor) | (PredictedStance::Against, Stance::Against)
        )
    }
}

impl From<Stance> for PredictedStance {
    fn from(s: Stance) -> Self {
        match s {
            Stance::Favor => PredictedStance::Favor,
            Stance::Against => PredictedStance::Against,
        }
    }
}

impl fmt::Display for PredictedStance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stance plays the role of the positive label (`1`) in a fairness metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FavorAsPositive,
    AgainstAsPositive,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::FavorAsPositive, Direction::AgainstAsPositive];

    pub fn positive(self) -> Stance {
        match self {
            Direction::FavorAsPositive => Stance::Favor,
            Direction::AgainstAsPositive => Stance::Against,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::FavorAsPositive => "favor",
            Direction::AgainstAsPositive => "against",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
