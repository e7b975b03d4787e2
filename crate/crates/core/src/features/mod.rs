//! Section slicing, per-section statistics and feature-set reductions.
//!
//! Each 1 m tunnel section becomes a 51-slot vector: for each of the eight
//! MWD parameters (in [`PARAM_NAMES`] order) the mean, median, standard
//! deviation, variance, skewness and kurtosis, followed by `Overburden`,
//! `TunnelWidth` and `JnMult`. This order is a frozen contract: sections.csv
//! and model documents depend on it.

mod sections;
mod select;
pub(crate) mod stats;
mod sulov;

pub use sections::{
    aggregate_dataset, read_sections_csv, section_samples, write_sections_csv, SectionSample,
};
pub use select::{select_features, FeatureSetKind, COLUMN_ALIASES, AUTOMATED_21};
pub use stats::{aggregate_section, rms_filter, summary, Summary};
pub use sulov::{mutual_information, pearson, sulov_reduce, SulovConfig, SulovResult};

use thiserror::Error;

use crate::dataset::PARAM_NAMES;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no readings fall in section {0}")]
    EmptySection(usize),
    #[error("empty input for parameter {0}")]
    EmptyInput(usize),
    #[error("unknown feature set '{0}'")]
    UnknownKind(String),
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("window {window} is larger than signal length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("section length must be positive")]
    BadSectionLength,
    #[error("need at least two features and aligned labels")]
    BadInput,
    #[error("{0}")]
    Labels(String),
    #[error("csv error: {0}")]
    Csv(String),
}

pub const STAT_NAMES: [&str; 6] = ["Mean", "Median", "StandardDeviation", "Variance", "Skewness", "Kurtosis"];
pub const GEOMETRY_NAMES: [&str; 3] = ["Overburden", "TunnelWidth", "JnMult"];

/// Number of canonical feature slots.
pub const N_FEATURES: usize = 51;

/// The 51 canonical feature names in slot order.
pub fn canonical_names() -> Vec<String> {
    let mut names = Vec::with_capacity(N_FEATURES);
    for p in PARAM_NAMES {
        for s in STAT_NAMES {
            names.push(format!("{p}{s}"));
        }
    }
    names.extend(GEOMETRY_NAMES.iter().map(|s| s.to_string()));
    names
}

/// Slot of parameter `param` and statistic `stat`.
pub fn slot(param: usize, stat: usize) -> usize {
    param * STAT_NAMES.len() + stat
}
