//! Seeded hyperparameter search.
//!
//! Trial 0 always evaluates the space's default configuration, so the gain
//! of tuning over defaults is visible in every history. Sampled
//! configurations depend only on `(seed, trial index)` and on earlier
//! trials, never on evaluation timing, so histories are reproducible and a
//! longer run extends a shorter one.

mod export;
mod space;
mod tpe;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use export::{export_history, parallel_coordinates_json, trials_csv};
pub use space::{default_space, Domain, Param, SearchSpace};

use crate::eval::{kfold_cv, CvResult, EvalError};
use crate::models::ModelError;
use crate::preprocess::PipelineSpec;
use crate::rng::child_rng;
use crate::table::{Features, Target};

/// One sampled hyperparameter assignment, keyed by parameter name.
pub type Config = BTreeMap<String, Value>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuningError {
    #[error("invalid search space: {0}")]
    BadSpace(String),
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("every trial failed; first error: {0}")]
    AllTrialsFailed(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    BalancedAccuracy,
    PrecisionMacro,
    R2,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::BalancedAccuracy => "balanced_accuracy",
            Objective::PrecisionMacro => "precision_macro",
            Objective::R2 => "r2",
        }
    }

    /// Per-fold values of this metric.
    pub fn fold_values(self, cv: &CvResult) -> Result<Vec<f64>, String> {
        cv.reports
            .iter()
            .map(|r| {
                r.scalars()
                    .into_iter()
                    .find(|(k, _)| *k == self.as_str())
                    .map(|(_, v)| v)
                    .ok_or_else(|| format!("metric {} missing from fold report", self.as_str()))
            })
            .collect()
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = TuningError;

    fn from_str(s: &str) -> Result<Self, TuningError> {
        match s {
            "balanced_accuracy" => Ok(Objective::BalancedAccuracy),
            "precision_macro" => Ok(Objective::PrecisionMacro),
            "r2" => Ok(Objective::R2),
            _ => Err(TuningError::BadSpace(format!("unknown objective '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Random,
    /// Ten warm-up trials, then the best of 24 candidates drawn near the top
    /// quarter of trials by the ratio of kernel densities (top vs rest).
    TpeLite,
}

impl FromStr for Sampler {
    type Err = TuningError;

    fn from_str(s: &str) -> Result<Self, TuningError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "random" => Ok(Sampler::Random),
            "tpe_lite" | "tpe" => Ok(Sampler::TpeLite),
            _ => Err(TuningError::BadSpace(format!("unknown sampler '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Complete,
    Failed,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Complete => "complete",
            TrialStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub config: Config,
    pub status: TrialStatus,
    /// Mean of the fold values; `None` when the trial failed.
    pub objective: Option<f64>,
    pub fold_values: Vec<f64>,
    pub error: Option<String>,
    /// Wall-clock seconds; excluded from exports so they stay reproducible.
    #[serde(skip)]
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    pub best: Trial,
    pub history: Vec<Trial>,
}

const TPE_WARMUP: usize = 10;

fn run_trial<E>(index: usize, config: Config, evaluator: &E) -> Trial
where
    E: Fn(&Config) -> Result<Vec<f64>, String> + Sync,
{
    let start = Instant::now();
    let outcome = evaluator(&config).and_then(|v| {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            Err("evaluator returned no finite values".to_string())
        } else {
            Ok(v)
        }
    });
    let duration_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(v) => Trial {
            index,
            objective: Some(v.iter().sum::<f64>() / v.len() as f64),
            config,
            status: TrialStatus::Complete,
            fold_values: v,
            error: None,
            duration_s,
        },
        Err(e) => {
            log::warn!("trial {index} failed: {e}");
            Trial { index, config, status: TrialStatus::Failed, objective: None, fold_values: Vec::new(), error: Some(e), duration_s }
        }
    }
}

/// Runs `n_trials` evaluations and returns the best complete trial
/// (ties go to the earlier trial). Failed trials stay in the history.
pub fn search<E>(
    space: &SearchSpace,
    objective: Objective,
    evaluator: &E,
    n_trials: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<SearchResult, TuningError>
where
    E: Fn(&Config) -> Result<Vec<f64>, String> + Sync,
{
    space.validate()?;
    if n_trials == 0 {
        return Err(TuningError::NoTrials);
    }
    let independent = match sampler {
        Sampler::Random => n_trials,
        Sampler::TpeLite => n_trials.min(TPE_WARMUP),
    };
    let configs: Vec<Config> = (0..independent)
        .map(|i| if i == 0 { space.defaults() } else { space.sample(&mut child_rng(seed, i as u64)) })
        .collect();
    let mut history: Vec<Trial> =
        configs.into_par_iter().enumerate().map(|(i, c)| run_trial(i, c, evaluator)).collect();
    for i in independent..n_trials {
        let config = tpe::propose(space, &history, &mut child_rng(seed, i as u64));
        history.push(run_trial(i, config, evaluator));
    }
    let best = history
        .iter()
        .filter_map(|t| t.objective.map(|o| (o, t)))
        .fold(None::<(f64, &Trial)>, |acc, (o, t)| match acc {
            Some((bo, _)) if bo >= o => acc,
            _ => Some((o, t)),
        })
        .map(|(_, t)| t.clone())
        .ok_or_else(|| TuningError::AllTrialsFailed(history[0].error.clone().unwrap_or_default()))?;
    Ok(SearchResult { objective, best, history })
}

/// Applies a configuration to a pipeline's model as hyperparameter overrides.
pub fn apply_config(base: &PipelineSpec, config: &Config) -> Result<PipelineSpec, ModelError> {
    let mut spec = base.clone();
    for (k, v) in config {
        spec.model.set_override(k, v.clone())?;
    }
    spec.model.validate()?;
    Ok(spec)
}

/// Objective evaluator backed by k-fold cross-validation of `base` with
/// each configuration applied.
pub fn cv_evaluator<'a>(
    base: &'a PipelineSpec,
    x: &'a Features,
    y: &'a Target,
    k: usize,
    seed: u64,
    objective: Objective,
) -> impl Fn(&Config) -> Result<Vec<f64>, String> + Sync + 'a {
    move |config: &Config| {
        let spec = apply_config(base, config).map_err(|e| e.to_string())?;
        let cv = kfold_cv(&spec, x, y, k, seed).map_err(|e: EvalError| e.to_string())?;
        objective.fold_values(&cv)
    }
}
