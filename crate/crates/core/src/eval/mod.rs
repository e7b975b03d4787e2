//! Splits, cross-validation, classification and regression metrics.

pub mod cv;
pub mod metrics;
pub mod regression;
pub mod splits;

use thiserror::Error;

use crate::models::ModelError;
use crate::preprocess::PreprocessError;

pub use cv::{holdout_eval, kfold_cv, score, zone_filtered_eval, CvResult, EvalReport, HoldoutResult, Spread};
pub use metrics::{
    binary_auc, classification_metrics, confusion_from_strings, confusion_matrix, evaluate_classification, f1_from,
    roc_auc_macro, Axis, ConfusionMatrix, MetricsReport,
};
pub use regression::{
    default_log_band, log_band_outliers, qq_points, regression_metrics, residual_linear_correction, LinearCorrection,
    RegressionReport,
};
pub use splits::{complement, kfold, kfold_plain, kfold_target, random_split, split_target, stratified_split, Split};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("ROC-AUC needs at least two classes in the truth")]
    SingleClassTruth,
    #[error("all true values are equal; R² is undefined")]
    DegenerateVariance,
    #[error("predictions have no variance")]
    DegeneratePredictions,
    #[error("class {class} has {count} samples; {need} needed")]
    ClassTooSmall { class: String, count: usize, need: usize },
    #[error("no samples in the requested subset")]
    EmptySubset,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Pipeline(#[from] PreprocessError),
}

impl From<ModelError> for EvalError {
    fn from(e: ModelError) -> Self {
        EvalError::Pipeline(PreprocessError::Model(e))
    }
}
