//! Sensitive attributes and how a record maps to a group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::StanceRecord;
use crate::dialect::DialectLabel;
use crate::readability::ReadabilityClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Dialect,
    Readability,
}

impl Attribute {
    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Dialect => "dialect",
            Attribute::Readability => "readability",
        }
    }

    /// Group ids an audit may use for this attribute.
    pub fn values(self) -> Vec<&'static str> {
        match self {
            Attribute::Dialect => vec!["AAE", "Hispanic", "Asian", "SAE"],
            Attribute::Readability => ReadabilityClass::ALL.iter().map(|c| c.as_str()).collect(),
        }
    }

    /// Groups audited when none are configured.
    pub fn default_groups(self) -> Vec<String> {
        match self {
            Attribute::Dialect => vec!["AAE".into(), "SAE".into()],
            Attribute::Readability => self.values().into_iter().map(String::from).collect(),
        }
    }

    /// Canonical spelling of a group id, accepting aliases
    /// (`low` for `Easy`, `standard` for `SAE`, ...).
    pub fn canonical_group(self, name: &str) -> Option<&'static str> {
        match self {
            Attribute::Dialect => match name.parse::<DialectLabel>().ok()? {
                DialectLabel::Unknown => None,
                label => Some(label.as_str()),
            },
            Attribute::Readability => name.parse::<ReadabilityClass>().ok().map(|c| c.as_str()),
        }
    }

    /// The record's group, or `None` when it is not annotated for this
    /// attribute or its dialect is `Unknown`.
    pub fn group_of(self, record: &StanceRecord) -> Option<&'static str> {
        match self {
            Attribute::Dialect => match record.dialect.as_ref()?.label {
                DialectLabel::Unknown => None,
                label => Some(label.as_str()),
            },
            Attribute::Readability => record.readability.as_ref().map(|r| r.class.as_str()),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dialect" => Ok(Attribute::Dialect),
            "readability" | "complexity" => Ok(Attribute::Readability),
            _ => Err(format!("unknown attribute {s:?} (expected dialect or readability)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_groups_accept_aliases() {
        assert_eq!(Attribute::Dialect.canonical_group("standard"), Some("SAE"));
        assert_eq!(Attribute::Dialect.canonical_group("unknown"), None);
        assert_eq!(Attribute::Readability.canonical_group("very high"), Some("VeryDifficult"));
        assert_eq!(Attribute::Readability.canonical_group("bogus"), None);
    }

    #[test]
    fn unannotated_record_has_no_group() {
        let r = StanceRecord::new("1", "x", "T", crate::Stance::Favor, "d");
        assert_eq!(Attribute::Dialect.group_of(&r), None);
        assert_eq!(Attribute::Readability.group_of(&r), None);
    }
}
