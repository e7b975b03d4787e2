//! Measure-while-drilling (MWD) rock mass classification toolkit.
//!
//! The crate turns depth-indexed drillhole sensor readings into 1 m tunnel
//! section feature vectors, attaches Q-system labels, and trains and
//! evaluates tabular classifiers and regressors on them:
//!
//! - [`dataset`]: CSV ingestion and validation of drillholes and blasting rounds
//! - [`qsystem`]: Q-value arithmetic, Q-classes, label groupings, transition zones
//! - [`features`]: section slicing, 51-slot statistics, feature-set reductions
//! - [`preprocess`]: scalers, SMOTE, outlier masks and the leakage-safe pipeline
//! - [`models`]: KNN, tree ensembles, gradient boosting, linear baselines, voting
//! - [`eval`]: splits, cross-validation, classification and regression metrics
//! - [`tuning`]: seeded random / TPE-style hyperparameter search
//! - [`synth`]: seeded synthetic tunnels with planted class structure
//! - [`cli`]: the `rockmass` command-line workflows

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod models;
pub mod preprocess;
pub mod qsystem;
pub mod rng;
pub mod synth;
pub mod table;
pub mod tuning;

pub use table::{ClassLabels, Features, Matrix, Target};
