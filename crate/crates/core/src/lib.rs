//! Demographic-bias auditing for zero-shot stance detection with LLMs.
//!
//! The pipeline annotates stance corpora with dialect and readability
//! attributes, collects stance predictions through a fixed prompt, and
//! measures group fairness (equal opportunity, demographic parity,
//! predictive parity) over repeated balanced samples.

pub mod attribute;
pub mod audit;
pub mod corpus;
pub mod dialect;
pub mod gateway;
pub mod metrics;
pub mod pipeline;
pub mod readability;
pub mod report;
pub mod stance;
pub mod text;

pub use corpus::{AttributeAnnotation, Corpus, DatasetFormat, StanceRecord};
pub use stance::{Direction, PredictedStance, Stance};
