use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CliError, CommonArgs};
use crate::features::FeatureSetKind;
use crate::models::{ModelKind, ModelSpec, Task};
use crate::preprocess::{BalanceSpec, OutlierMethod, PipelineSpec, ScalerKind};
use crate::qsystem::{GroupingScheme, SchemeRegistry};
use crate::synth::SynthSpec;
use crate::tuning::{Objective, Sampler, SearchSpace};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

/// What a model learns from each section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Q-class after the grouping scheme.
    #[default]
    Class,
    LogQ,
    LogQBase,
}

impl TargetKind {
    pub fn task(self) -> Task {
        match self {
            TargetKind::Class => Task::Classification,
            _ => Task::Regression,
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "class" => Ok(TargetKind::Class),
            "log_q" | "q" => Ok(TargetKind::LogQ),
            "log_q_base" | "q_base" => Ok(TargetKind::LogQBase),
            _ => Err(CliError::config(format!("unknown target '{s}' (class, log_q, log_q_base)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Holdout,
    Cv,
    Both,
}

impl EvalMode {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "holdout" => Ok(EvalMode::Holdout),
            "cv" => Ok(EvalMode::Cv),
            "both" => Ok(EvalMode::Both),
            _ => Err(CliError::config(format!("unknown eval mode '{s}' (holdout, cv, both)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub n_trials: usize,
    pub sampler: Sampler,
    /// Defaults to balanced accuracy for classes and R² for values.
    pub objective: Option<Objective>,
    /// Defaults to the learner's built-in space.
    pub space: Option<SearchSpace>,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self { n_trials: 20, sampler: Sampler::Random, objective: None, space: None }
    }
}

/// Everything a run depends on. Written to every output directory; feeding
/// it back through `--config` reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Directory holding `drillholes.csv` and `rounds.csv`.
    pub input: Option<PathBuf>,
    pub sections: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub grouping: String,
    pub target: TargetKind,
    pub feature_set: String,
    pub pipeline: PipelineSpec,
    pub eval: EvalMode,
    pub test_fraction: f64,
    pub cv_folds: usize,
    pub section_length_m: f64,
    pub transition_window_m: f64,
    pub lenient: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            input: None,
            sections: None,
            model_path: None,
            run_dir: None,
            out: PathBuf::from("out"),
            seed: 0,
            grouping: "A, B, C, D, E1, E2".into(),
            target: TargetKind::Class,
            feature_set: FeatureSetKind::All51.as_str().into(),
            pipeline: PipelineSpec::new(ModelSpec::new(ModelKind::Knn, Task::Classification)),
            eval: EvalMode::Holdout,
            test_fraction: 0.25,
            cv_folds: 5,
            section_length_m: 1.0,
            transition_window_m: 10.0,
            lenient: false,
            synth: None,
            tune: None,
        }
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// A learner of `kind` with its defaults; `voting` means the default ensemble.
pub fn model_for(kind: ModelKind, task: Task) -> ModelSpec {
    match kind {
        ModelKind::Voting => ModelSpec::default_ensemble(task),
        k => ModelSpec::new(k, task),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// File (if any), then flags. The pipeline seed is always re-derived
    /// from `seed` so a saved config replays exactly.
    pub fn resolve(command: &str, a: &CommonArgs) -> Result<Self, CliError> {
        let mut c = match &a.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        c.command = command.to_string();
        if let Some(v) = a.seed {
            c.seed = v;
        }
        if let Some(v) = &a.out {
            c.out = v.clone();
        }
        if let Some(v) = &a.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &a.sections {
            c.sections = Some(v.clone());
        }
        if let Some(v) = &a.grouping {
            c.grouping = v.clone();
        }
        if let Some(v) = &a.feature_set {
            c.feature_set = v.clone();
        }
        if let Some(v) = &a.target {
            c.target = TargetKind::parse(v)?;
        }
        let task = c.target.task();
        if let Some(v) = &a.model {
            let kind: ModelKind = v.parse().map_err(|e: crate::models::ModelError| CliError::config(e.to_string()))?;
            c.pipeline.model = model_for(kind, task);
        } else if c.pipeline.model.task != task {
            c.pipeline.model = model_for(c.pipeline.model.kind, task);
        }
        for kv in &a.param {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config(format!("--param expects key=value, got '{kv}'")))?;
            c.pipeline.model.set_override(k.trim(), parse_value(v.trim())).map_err(|e| CliError::config(e.to_string()))?;
        }
        if let Some(v) = &a.scaler {
            c.pipeline.scaler = v.parse::<ScalerKind>().map_err(|e| CliError::config(e.to_string()))?;
        }
        if let Some(v) = &a.balance {
            c.pipeline.balance = BalanceSpec::from_name(v).map_err(|e| CliError::config(e.to_string()))?;
        }
        if let Some(v) = &a.outliers {
            c.pipeline.outliers = OutlierMethod::from_name(v).map_err(|e| CliError::config(e.to_string()))?;
        }
        if let Some(v) = &a.eval {
            c.eval = EvalMode::parse(v)?;
        }
        if let Some(v) = a.cv_folds {
            c.cv_folds = v;
        }
        if let Some(v) = a.test_fraction {
            c.test_fraction = v;
        }
        if let Some(v) = a.section_length {
            c.section_length_m = v;
        }
        if let Some(v) = a.transition_window {
            c.transition_window_m = v;
        }
        if a.lenient {
            c.lenient = true;
        }
        c.pipeline = c.pipeline.clone().with_seed(c.seed);
        Ok(c)
    }

    /// Checks that do not need any input data.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scheme()?;
        self.feature_kind()?;
        self.pipeline.model.validate().map_err(|e| CliError::config(e.to_string()))?;
        if self.pipeline.model.task != self.target.task() {
            return Err(CliError::config("model task does not match the target"));
        }
        match (&self.pipeline.balance, self.target.task()) {
            (BalanceSpec::Smote { .. }, Task::Regression) => return Err(CliError::config("smote balances classes; use 'bins' for value targets")),
            (BalanceSpec::Bins { .. }, Task::Classification) => return Err(CliError::config("'bins' balances value targets; use 'smote' for classes")),
            _ => {}
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::config(format!("test fraction {} is outside (0, 1)", self.test_fraction)));
        }
        if self.cv_folds < 2 {
            return Err(CliError::config("cv folds must be at least 2"));
        }
        if !(self.section_length_m > 0.0) || !(self.transition_window_m >= 0.0) {
            return Err(CliError::config("section length must be positive and the transition window non-negative"));
        }
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        if let Some(t) = &self.tune {
            if t.n_trials == 0 {
                return Err(CliError::config("tune needs at least one trial"));
            }
            if let Some(s) = &t.space {
                s.validate().map_err(|e| CliError::config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// A registered scheme by name, or an ad-hoc one such as `"AB, CDE"`.
    pub fn scheme(&self) -> Result<GroupingScheme, CliError> {
        match SchemeRegistry::default().get(&self.grouping) {
            Ok(s) => Ok(s.clone()),
            Err(_) => GroupingScheme::from_groups(&self.grouping).map_err(|e| CliError::config(e.to_string())),
        }
    }

    pub fn feature_kind(&self) -> Result<FeatureSetKind, CliError> {
        self.feature_set.parse().map_err(|e: crate::features::FeatureError| CliError::config(e.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        fs::write(dir.join(RUN_CONFIG_FILE), text + "\n").map_err(CliError::io)
    }
}
