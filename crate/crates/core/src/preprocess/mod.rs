//! Training-only preprocessing: scalers, class balancing, outlier masks,
//! and the pipeline that keeps every fitted statistic on the training side.

pub mod outliers;
pub mod pipeline;
pub mod resample;
pub mod scaler;
pub mod smote;

use thiserror::Error;

use crate::models::ModelError;

pub use outliers::{
    average_path_length, isolation_forest_mask, isolation_scores, mad_outlier_mask, IsolationParams, OutlierMethod,
};
pub use pipeline::{BalanceSpec, FitStats, FittedPipeline, Pipeline, PipelineSpec};
pub use resample::{label_bins, regression_resample, ResampleResult};
pub use scaler::{apply_scaler, fit_scaler, Scaler, ScalerKind};
pub use smote::{smote_oversample, SmoteResult, SyntheticOrigin};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("class {class} has {count} samples; at least 2 are needed")]
    TooFewSamples { class: String, count: usize },
    #[error("contamination {0} must lie in (0, 0.5)")]
    BadContamination(f64),
    #[error("bad preprocessing parameter: {0}")]
    BadParameter(String),
    #[error("pipeline is not fitted")]
    NotFitted,
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
