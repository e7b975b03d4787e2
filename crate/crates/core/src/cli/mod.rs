//! The `rockmass` command line. Every command resolves a [`RunConfig`] from
//! an optional JSON file plus flags (flags win), validates it before touching
//! data, and writes it next to its outputs so the run can be replayed.
//!
//! Failures print one JSON object on stderr and exit with 2 (config),
//! 3 (data) or 4 (runtime).

mod commands;
mod config;
pub mod plots;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use commands::ModelBundle;
pub use config::{model_for, EvalMode, RunConfig, TargetKind, TuneConfig, RUN_CONFIG_FILE};

use crate::dataset::DatasetError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::models::ModelError;
use crate::preprocess::PreprocessError;
use crate::qsystem::QError;
use crate::synth::SynthError;
use crate::tuning::TuningError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Runtime => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Runtime => "runtime",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(m: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: m.into() }
    }

    pub fn data(m: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Data, message: m.into() }
    }

    pub fn runtime(m: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Runtime, message: m.into() }
    }

    /// Output-side I/O failures.
    pub fn io(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind.as_str(), "code": self.kind.exit_code(), "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::UnknownKind(_) => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<QError> for CliError {
    fn from(e: QError) -> Self {
        match e {
            QError::UnknownScheme(_) | QError::InvalidScheme { .. } => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::BadHyperparameter(_) | ModelError::TaskMismatch(_) => Self::config(e.to_string()),
            ModelError::FeatureContractMismatch(_)
            | ModelError::VersionMismatch { .. }
            | ModelError::CorruptDocument(_)
            | ModelError::BadInput(_) => Self::data(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::Model(m) => m.into(),
            PreprocessError::BadParameter(_) | PreprocessError::BadContamination(_) => Self::config(e.to_string()),
            PreprocessError::TooFewSamples { .. } | PreprocessError::TaskMismatch(_) => Self::data(e.to_string()),
            PreprocessError::NotFitted => Self::runtime(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline(p) => p.into(),
            EvalError::EmptyMatrix | EvalError::DegeneratePredictions | EvalError::SingleClassTruth => Self::runtime(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<TuningError> for CliError {
    fn from(e: TuningError) -> Self {
        match e {
            TuningError::BadSpace(_) | TuningError::NoTrials => Self::config(e.to_string()),
            TuningError::AllTrialsFailed(_) => Self::runtime(e.to_string()),
            TuningError::Io(_) => Self::runtime(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::BadSpec(_) => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

/// Flags shared by every command. Unset flags leave the config file (or
/// the defaults) alone.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Run-config JSON; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory with drillholes.csv and rounds.csv.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// sections.csv produced by `aggregate`.
    #[arg(long)]
    pub sections: Option<PathBuf>,
    /// Registered scheme name or groups such as "ABCD, E".
    #[arg(long)]
    pub grouping: Option<String>,
    /// all51, domain35, automated21, dependent39, mwd_only48, mwd_median8.
    #[arg(long)]
    pub feature_set: Option<String>,
    /// class, log_q or log_q_base.
    #[arg(long)]
    pub target: Option<String>,
    /// knn, dt, rf, et, gbt, logistic, linear, dummy or voting.
    #[arg(long)]
    pub model: Option<String>,
    /// Hyperparameter override `key=value`; repeatable. Values parse as JSON
    /// when they can. Voting members are addressed as `member.key`.
    #[arg(long = "param")]
    pub param: Vec<String>,
    /// minmax, standard or none.
    #[arg(long)]
    pub scaler: Option<String>,
    /// none, smote (classes) or bins (values).
    #[arg(long)]
    pub balance: Option<String>,
    /// none, mad, iforest or both.
    #[arg(long)]
    pub outliers: Option<String>,
    /// holdout, cv or both.
    #[arg(long)]
    pub eval: Option<String>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Section length in metres.
    #[arg(long)]
    pub section_length: Option<f64>,
    /// Transition window in metres after a class change.
    #[arg(long)]
    pub transition_window: Option<f64>,
    /// Skip bad drillhole rows instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Parser)]
#[command(name = "rockmass", version, about = "Rock mass classification from drilling data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tunnel: drillholes.csv, rounds.csv, ground_truth.csv.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        rounds: Option<usize>,
        /// Noise scale relative to the class separation.
        #[arg(long)]
        noise: Option<f64>,
        /// Metres over which signals blend after a class change.
        #[arg(long)]
        smoothing: Option<f64>,
    },
    /// Parse and validate a dataset; writes canonical CSVs and a report.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build section features: sections.csv.
    Aggregate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit a pipeline and evaluate it: model.json, eval_report.json, plots.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// k-fold cross-validation: cv_result.json, cv_summary.csv.
    Cv {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Hyperparameter search: trials.csv, parallel_coordinates.json, best_config.json.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        trials: Option<usize>,
        /// random or tpe.
        #[arg(long)]
        sampler: Option<String>,
        /// balanced_accuracy, precision_macro or r2.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Score sections with a saved model: predictions.csv.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// model.json written by `train`.
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Plots (SVG with CSV twins) from a finished run directory.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        run: Option<PathBuf>,
    },
}

/// Parses arguments and runs one command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::config(e.to_string().trim().to_string())),
    };
    commands::dispatch(cli.command)
}

/// Applies `ROCKMASS_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ROCKMASS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("ROCKMASS_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::runtime(e.to_string()))
}

/// Binary entry point; returns the process exit code.
pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match configure_threads().and_then(|_| run(std::env::args_os())) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.kind.exit_code()
        }
    }
}
