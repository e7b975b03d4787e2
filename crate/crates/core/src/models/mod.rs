//! The learner zoo behind one fit / predict / serialize contract.
//!
//! A [`ModelSpec`] names a learner kind, a task and a map of hyperparameters;
//! [`fit`] validates it and returns a [`TrainedModel`] that carries the `ModelSpec`,
//! the training feature names and the class roster. Prediction rejects
//! feature tables whose column names differ from the training contract.
//!
//! Unset hyperparameters take these defaults:
//!
//! | kind | defaults |
//! |------|----------|
//! | `knn` | `k = 5`, `distance_metric = "manhattan"`, `weights = "uniform"` |
//! | `decision_tree` | `max_depth = null`, `min_samples_split = 2`, `min_samples_leaf = 1`, `max_features = "all"` |
//! | `random_forest` | tree defaults plus `n_trees = 100`, `bootstrap = true`, `max_features = "sqrt"` (classification) |
//! | `extra_trees` | tree defaults plus `n_trees = 100`, `bootstrap = false`, `max_features = "sqrt"` (classification) |
//! | `gradient_boosted_trees` | `n_rounds = 100`, `learning_rate = 0.1`, `max_depth = 3`, `l2 = 1.0`, `subsample = 1.0` |
//! | `logistic_regression` | `l2 = 1e-4`, `learning_rate = null` (automatic), `max_iter = 1000`, `tol = 1e-6` |
//! | `linear_regression` | `l2 = 0` |
//! | `voting` | `vote_mode = "soft"` (classification) or `"average"` (regression) |

pub mod dummy;
pub mod gbt;
pub mod knn;
pub mod linear;
pub mod tree;
pub mod voting;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use dummy::DummyModel;
pub use gbt::{GbtModel, GbtParams};
pub use knn::{k_nearest, KnnModel, KnnTarget, Metric, Weighting};
pub use linear::{LinearModel, LogisticModel, LogisticParams};
pub use tree::{Forest, ForestParams, MaxFeatures, Node, Splitter, Tree, TreeParams};
pub use voting::{FittedMember, VoteMode, VotingMember, VotingModel};

use crate::preprocess::ScalerKind;
use crate::table::{Features, Matrix, Target};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),
    #[error("feature contract mismatch: {0}")]
    FeatureContractMismatch(String),
    #[error("model is not fitted")]
    NotFitted,
    #[error("voting members disagree on the class roster")]
    HeterogeneousRoster,
    #[error("voting needs at least two members, got {0}")]
    EmptyEnsemble(usize),
    #[error("model document schema version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("corrupt model document: {0}")]
    CorruptDocument(String),
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoostedTrees,
    LogisticRegression,
    LinearRegression,
    Dummy,
    Voting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Knn,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::GradientBoostedTrees,
        ModelKind::LogisticRegression,
        ModelKind::LinearRegression,
        ModelKind::Dummy,
        ModelKind::Voting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::GradientBoostedTrees => "gradient_boosted_trees",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::LinearRegression => "linear_regression",
            ModelKind::Dummy => "dummy",
            ModelKind::Voting => "voting",
        }
    }

    /// Label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Knn => "KNN",
            ModelKind::DecisionTree => "Decision tree",
            ModelKind::RandomForest => "Random forest",
            ModelKind::ExtraTrees => "Extra trees",
            ModelKind::GradientBoostedTrees => "GBT (stand-in)",
            ModelKind::LogisticRegression => "Logistic regression",
            ModelKind::LinearRegression => "Linear regression",
            ModelKind::Dummy => "Dummy",
            ModelKind::Voting => "Voting",
        }
    }

    fn allowed_params(self) -> &'static [&'static str] {
        const TREE: &[&str] = &["max_depth", "min_samples_split", "min_samples_leaf", "max_features"];
        const FOREST: &[&str] = &["max_depth", "min_samples_split", "min_samples_leaf", "max_features", "n_trees", "bootstrap"];
        match self {
            ModelKind::Knn => &["k", "distance_metric", "weights"],
            ModelKind::DecisionTree => TREE,
            ModelKind::RandomForest | ModelKind::ExtraTrees => FOREST,
            ModelKind::GradientBoostedTrees => {
                &["n_rounds", "learning_rate", "max_depth", "min_samples_leaf", "min_samples_split", "l2", "subsample", "max_features"]
            }
            ModelKind::LogisticRegression => &["l2", "learning_rate", "max_iter", "tol"],
            ModelKind::LinearRegression => &["l2"],
            ModelKind::Dummy => &[],
            ModelKind::Voting => &["vote_mode"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let k = s.to_ascii_lowercase().replace('-', "_");
        Ok(match k.as_str() {
            "knn" => ModelKind::Knn,
            "decision_tree" | "dt" | "tree" => ModelKind::DecisionTree,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "extra_trees" | "et" => ModelKind::ExtraTrees,
            "gradient_boosted_trees" | "gbt" => ModelKind::GradientBoostedTrees,
            "logistic_regression" | "logistic" => ModelKind::LogisticRegression,
            "linear_regression" | "linear" => ModelKind::LinearRegression,
            "dummy" => ModelKind::Dummy,
            "voting" => ModelKind::Voting,
            _ => return Err(ModelError::BadHyperparameter(format!("unknown model kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl FromStr for Task {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            _ => Err(ModelError::BadHyperparameter(format!("unknown task '{s}'"))),
        }
    }
}

/// Declarative learner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub task: Task,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<VotingMember>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, task: Task) -> Self {
        Self { kind, task, params: BTreeMap::new(), members: Vec::new(), seed: 0 }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Sets the seed here and, derived per index, on every voting member.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        for (i, m) in self.members.iter_mut().enumerate() {
            m.spec = m.spec.clone().with_seed(crate::rng::derive_seed(seed, i as u64));
        }
        self
    }

    pub fn voting(task: Task, mode: VoteMode, members: Vec<VotingMember>) -> Self {
        let mut s = Self::new(ModelKind::Voting, task).with_param("vote_mode", mode.as_str());
        s.members = members;
        s
    }

    /// KNN behind MinMax plus ExtraTrees and GBT on raw features; soft votes
    /// for classification, averaged values for regression.
    pub fn default_ensemble(task: Task) -> Self {
        let member = |name: &str, scaler, kind| VotingMember { name: name.into(), scaler, spec: ModelSpec::new(kind, task) };
        let mode = match task {
            Task::Classification => VoteMode::Soft,
            Task::Regression => VoteMode::Average,
        };
        Self::voting(
            task,
            mode,
            vec![
                member("knn", ScalerKind::MinMax, ModelKind::Knn),
                member("et", ScalerKind::None, ModelKind::ExtraTrees),
                member("gbt", ScalerKind::None, ModelKind::GradientBoostedTrees),
            ],
        )
    }

    /// Applies `key = value`. `"member.key"` targets the voting member named
    /// `member`; `"member.scaler"` replaces that member's scaler.
    pub fn set_override(&mut self, key: &str, value: Value) -> Result<(), ModelError> {
        if let Some((head, rest)) = key.split_once('.') {
            let m = self
                .members
                .iter_mut()
                .find(|m| m.name == head)
                .ok_or_else(|| ModelError::BadHyperparameter(format!("no member named '{head}'")))?;
            if rest == "scaler" {
                let s = value.as_str().ok_or_else(|| ModelError::BadHyperparameter(format!("{key} must be a string")))?;
                m.scaler = s.parse::<ScalerKind>().map_err(|e| ModelError::BadHyperparameter(e.to_string()))?;
                return Ok(());
            }
            return m.spec.set_override(rest, value);
        }
        if !self.kind.allowed_params().contains(&key) {
            return Err(ModelError::BadHyperparameter(format!("{} has no parameter '{key}'", self.kind)));
        }
        self.params.insert(key.to_string(), value);
        Ok(())
    }

    /// Checks every hyperparameter (recursively for members) without fitting.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.resolve().map(|_| ())?;
        for m in &self.members {
            m.spec.validate()?;
        }
        Ok(())
    }

    fn resolve(&self) -> Result<Resolved, ModelError> {
        let p = Params { spec: self };
        for key in self.params.keys() {
            if !self.kind.allowed_params().contains(&key.as_str()) {
                return Err(ModelError::BadHyperparameter(format!("{} has no parameter '{key}'", self.kind)));
            }
        }
        if self.kind != ModelKind::Voting && !self.members.is_empty() {
            return Err(ModelError::BadHyperparameter(format!("{} takes no members", self.kind)));
        }
        match (self.kind, self.task) {
            (ModelKind::LogisticRegression, Task::Regression) | (ModelKind::LinearRegression, Task::Classification) => {
                return Err(ModelError::TaskMismatch(format!("{} does not support {}", self.kind, self.task)));
            }
            _ => {}
        }
        let classif = self.task == Task::Classification;
        let tree = |default_mf: MaxFeatures, default_depth: Option<usize>, splitter: Splitter| -> Result<TreeParams, ModelError> {
            Ok(TreeParams {
                max_depth: p.opt_usize("max_depth", default_depth)?,
                min_samples_split: p.usize_min("min_samples_split", 2, 2)?,
                min_samples_leaf: p.usize_min("min_samples_leaf", 1, 1)?,
                max_features: match self.params.get("max_features") {
                    None => default_mf,
                    Some(v) => MaxFeatures::from_value(v).map_err(ModelError::BadHyperparameter)?,
                },
                splitter,
            })
        };
        let ensemble_mf = if classif { MaxFeatures::Sqrt } else { MaxFeatures::All };
        Ok(match self.kind {
            ModelKind::Knn => Resolved::Knn {
                k: p.usize_min("k", 5, 1)?,
                metric: p.parse_str("distance_metric", Metric::Manhattan)?,
                weights: p.parse_str("weights", Weighting::Uniform)?,
            },
            ModelKind::DecisionTree => {
                Resolved::Forest(ForestParams { n_trees: 1, bootstrap: false, tree: tree(MaxFeatures::All, None, Splitter::Best)? })
            }
            ModelKind::RandomForest => Resolved::Forest(ForestParams {
                n_trees: p.usize_min("n_trees", 100, 1)?,
                bootstrap: p.bool("bootstrap", true)?,
                tree: tree(ensemble_mf, None, Splitter::Best)?,
            }),
            ModelKind::ExtraTrees => Resolved::Forest(ForestParams {
                n_trees: p.usize_min("n_trees", 100, 1)?,
                bootstrap: p.bool("bootstrap", false)?,
                tree: tree(ensemble_mf, None, Splitter::Random)?,
            }),
            ModelKind::GradientBoostedTrees => Resolved::Gbt(GbtParams {
                n_rounds: p.usize_min("n_rounds", 100, 0)?,
                learning_rate: p.f64_in("learning_rate", 0.1, 0.0, f64::INFINITY, false)?,
                l2: p.f64_in("l2", 1.0, 0.0, f64::INFINITY, true)?,
                subsample: p.f64_in("subsample", 1.0, 0.0, 1.0, false)?,
                tree: tree(MaxFeatures::All, Some(3), Splitter::Best)?,
            }),
            ModelKind::LogisticRegression => Resolved::Logistic(LogisticParams {
                l2: p.f64_in("l2", 1e-4, 0.0, f64::INFINITY, true)?,
                learning_rate: match self.params.get("learning_rate") {
                    None | Some(Value::Null) => None,
                    Some(_) => Some(p.f64_in("learning_rate", 0.1, 0.0, f64::INFINITY, false)?),
                },
                max_iter: p.usize_min("max_iter", 1000, 1)?,
                tol: p.f64_in("tol", 1e-6, 0.0, f64::INFINITY, true)?,
            }),
            ModelKind::LinearRegression => Resolved::Linear { l2: p.f64_in("l2", 0.0, 0.0, f64::INFINITY, true)? },
            ModelKind::Dummy => Resolved::Dummy,
            ModelKind::Voting => Resolved::Voting {
                mode: p.parse_str("vote_mode", if classif { VoteMode::Soft } else { VoteMode::Average })?,
            },
        })
    }
}

enum Resolved {
    Knn { k: usize, metric: Metric, weights: Weighting },
    Forest(ForestParams),
    Gbt(GbtParams),
    Logistic(LogisticParams),
    Linear { l2: f64 },
    Dummy,
    Voting { mode: VoteMode },
}

struct Params<'a> {
    spec: &'a ModelSpec,
}

impl Params<'_> {
    fn bad(&self, key: &str, v: &Value) -> ModelError {
        ModelError::BadHyperparameter(format!("{}: {key} = {v}", self.spec.kind))
    }

    fn as_usize(&self, key: &str, v: &Value) -> Result<usize, ModelError> {
        if let Some(u) = v.as_u64() {
            return Ok(u as usize);
        }
        match v.as_f64() {
            Some(f) if f >= 0.0 && f.fract() == 0.0 => Ok(f as usize),
            _ => Err(self.bad(key, v)),
        }
    }

    fn usize_min(&self, key: &str, default: usize, min: usize) -> Result<usize, ModelError> {
        match self.spec.params.get(key) {
            None => Ok(default),
            Some(v) => {
                let u = self.as_usize(key, v)?;
                if u < min {
                    return Err(self.bad(key, v));
                }
                Ok(u)
            }
        }
    }

    fn opt_usize(&self, key: &str, default: Option<usize>) -> Result<Option<usize>, ModelError> {
        match self.spec.params.get(key) {
            None => Ok(default),
            Some(Value::Null) => Ok(None),
            Some(v) => {
                let u = self.as_usize(key, v)?;
                if u == 0 {
                    return Err(self.bad(key, v));
                }
                Ok(Some(u))
            }
        }
    }

    /// Real in `(lo, hi]`, or `[lo, hi]` when `closed_low`.
    fn f64_in(&self, key: &str, default: f64, lo: f64, hi: f64, closed_low: bool) -> Result<f64, ModelError> {
        match self.spec.params.get(key) {
            None => Ok(default),
            Some(v) => {
                let f = v.as_f64().ok_or_else(|| self.bad(key, v))?;
                let low_ok = if closed_low { f >= lo } else { f > lo };
                if !(low_ok && f <= hi && f.is_finite()) {
                    return Err(self.bad(key, v));
                }
                Ok(f)
            }
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ModelError> {
        match self.spec.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.bad(key, v)),
        }
    }

    fn parse_str<T: for<'de> Deserialize<'de>>(&self, key: &str, default: T) -> Result<T, ModelError> {
        match self.spec.params.get(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value(v.clone()).map_err(|_| self.bad(key, v)),
        }
    }
}

/// Fitted learner state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelState {
    Knn(KnnModel),
    Forest(Forest),
    Gbt(GbtModel),
    Logistic(LogisticModel),
    Linear(LinearModel),
    Dummy(DummyModel),
    Voting(VotingModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    /// Class roster for classification.
    pub roster: Option<Vec<String>>,
    pub state: ModelState,
}

/// Fits `spec` on `x` and `y`. Deterministic given `spec.seed`.
pub fn fit(spec: &ModelSpec, x: &Features, y: &Target) -> Result<TrainedModel, ModelError> {
    let resolved = spec.resolve()?;
    let n = x.n_rows();
    if n == 0 || y.len() != n {
        return Err(ModelError::BadInput(format!("{n} feature rows, {} targets", y.len())));
    }
    if !x.matrix.is_finite() {
        return Err(ModelError::BadInput("non-finite feature value".into()));
    }
    let names = &x.names;
    let m = &x.matrix;
    let (roster, classes) = match (spec.task, y) {
        (Task::Classification, Target::Classes(c)) => (Some(c.roster.clone()), Some(c)),
        (Task::Regression, Target::Values(v)) => {
            if v.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::BadInput("non-finite target value".into()));
            }
            (None, None)
        }
        (task, _) => return Err(ModelError::TaskMismatch(format!("{task} spec with the other target type"))),
    };
    let state = match resolved {
        Resolved::Knn { k, metric, weights } => ModelState::Knn(KnnModel {
            k,
            metric,
            weights,
            x: m.clone(),
            y: match (classes, y) {
                (Some(c), _) => KnnTarget::Classes { labels: c.labels.clone(), n_classes: c.n_classes() },
                (None, Target::Values(v)) => KnnTarget::Values(v.clone()),
                _ => unreachable!(),
            },
        }),
        Resolved::Forest(p) => {
            let target = match (classes, y) {
                (Some(c), _) => tree::TreeTarget::Classes { labels: &c.labels, n_classes: c.n_classes() },
                (None, Target::Values(v)) => tree::TreeTarget::Values(v),
                _ => unreachable!(),
            };
            ModelState::Forest(Forest::fit(m, target, &p, names, spec.seed))
        }
        Resolved::Gbt(p) => {
            let target = match (classes, y) {
                (Some(c), _) => gbt::GbtTarget::Classes { labels: &c.labels, n_classes: c.n_classes() },
                (None, Target::Values(v)) => gbt::GbtTarget::Values(v),
                _ => unreachable!(),
            };
            ModelState::Gbt(GbtModel::fit(m, target, &p, names, spec.seed))
        }
        Resolved::Logistic(p) => {
            let c = classes.expect("task checked");
            if c.counts().iter().filter(|&&k| k > 0).count() < 2 {
                return Err(ModelError::DegenerateTraining("logistic regression needs two classes".into()));
            }
            ModelState::Logistic(LogisticModel::fit(m, &c.labels, c.n_classes(), &p))
        }
        Resolved::Linear { l2 } => ModelState::Linear(LinearModel::fit(m, y.as_values().expect("task checked"), l2)),
        Resolved::Dummy => ModelState::Dummy(match (classes, y) {
            (Some(c), _) => DummyModel::fit_classes(&c.labels, c.n_classes()),
            (None, Target::Values(v)) => DummyModel::fit_values(v),
            _ => unreachable!(),
        }),
        Resolved::Voting { mode } => ModelState::Voting(VotingModel::fit(spec.task, mode, &spec.members, x, y)?),
    };
    Ok(TrainedModel { spec: spec.clone(), feature_names: names.clone(), roster, state })
}

/// Row-wise argmax; ties go to the lower column.
pub fn argmax_rows(p: &Matrix) -> Vec<usize> {
    p.rows_iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..r.len() {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

impl TrainedModel {
    pub fn task(&self) -> Task {
        self.spec.task
    }

    pub fn n_classes(&self) -> usize {
        self.roster.as_ref().map_or(0, Vec::len)
    }

    fn check(&self, x: &Features, task: Task) -> Result<(), ModelError> {
        if self.spec.task != task {
            return Err(ModelError::TaskMismatch(format!("model is {}", self.spec.task)));
        }
        if x.names != self.feature_names {
            let first = self
                .feature_names
                .iter()
                .zip(&x.names)
                .position(|(a, b)| a != b)
                .unwrap_or(self.feature_names.len().min(x.names.len()));
            return Err(ModelError::FeatureContractMismatch(format!(
                "expected {} features, got {}; first difference at column {first}",
                self.feature_names.len(),
                x.names.len()
            )));
        }
        Ok(())
    }

    /// Class indices into the roster.
    pub fn predict(&self, x: &Features) -> Result<Vec<usize>, ModelError> {
        self.check(x, Task::Classification)?;
        let k = self.n_classes();
        Ok(match &self.state {
            ModelState::Knn(m) => m.predict(&x.matrix),
            ModelState::Dummy(m) => m.predict(x.n_rows()),
            ModelState::Voting(v) => v.predict(x, k)?,
            _ => argmax_rows(&self.predict_proba(x)?),
        })
    }

    pub fn predict_labels(&self, x: &Features) -> Result<Vec<String>, ModelError> {
        let roster = self.roster.as_ref().ok_or(ModelError::TaskMismatch("model is regression".into()))?;
        Ok(self.predict(x)?.into_iter().map(|i| roster[i].clone()).collect())
    }

    /// One row per sample, one column per roster class; rows sum to 1.
    pub fn predict_proba(&self, x: &Features) -> Result<Matrix, ModelError> {
        self.check(x, Task::Classification)?;
        let k = self.n_classes();
        Ok(match &self.state {
            ModelState::Knn(m) => m.predict_proba(&x.matrix),
            ModelState::Forest(f) => f.predict(&x.matrix),
            ModelState::Gbt(g) => g.predict_proba(&x.matrix),
            ModelState::Logistic(l) => l.predict_proba(&x.matrix),
            ModelState::Dummy(d) => d.predict_proba(x.n_rows()),
            ModelState::Voting(v) => v.predict_proba(x, k)?,
            ModelState::Linear(_) => unreachable!("linear regression is regression-only"),
        })
    }

    pub fn predict_value(&self, x: &Features) -> Result<Vec<f64>, ModelError> {
        self.check(x, Task::Regression)?;
        Ok(match &self.state {
            ModelState::Knn(m) => m.predict_value(&x.matrix),
            ModelState::Forest(f) => f.predict(&x.matrix).column(0),
            ModelState::Gbt(g) => g.predict_value(&x.matrix),
            ModelState::Linear(l) => l.predict(&x.matrix),
            ModelState::Dummy(d) => d.predict_value(x.n_rows()),
            ModelState::Voting(v) => v.predict_value(x)?,
            ModelState::Logistic(_) => unreachable!("logistic regression is classification-only"),
        })
    }

    /// Normalized impurity importance for tree learners.
    pub fn feature_importance(&self) -> Option<Vec<f64>> {
        match &self.state {
            ModelState::Forest(f) => Some(f.importance.clone()),
            ModelState::Gbt(g) => Some(g.importance.clone()),
            _ => None,
        }
    }
}

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct DocumentOut<'a> {
    schema_version: u64,
    spec: &'a ModelSpec,
    state: StateOut<'a>,
}

#[derive(Serialize)]
struct StateOut<'a> {
    feature_names: &'a [String],
    roster: &'a Option<Vec<String>>,
    model: &'a ModelState,
}

#[derive(Deserialize)]
struct DocumentIn {
    spec: ModelSpec,
    state: StateIn,
}

#[derive(Deserialize)]
struct StateIn {
    feature_names: Vec<String>,
    roster: Option<Vec<String>>,
    model: ModelState,
}

/// Versioned JSON document `{"schema_version", "spec", "state"}`.
pub fn serialize_model(model: &TrainedModel) -> Vec<u8> {
    let doc = DocumentOut {
        schema_version: SCHEMA_VERSION,
        spec: &model.spec,
        state: StateOut { feature_names: &model.feature_names, roster: &model.roster, model: &model.state },
    };
    serde_json::to_vec(&doc).expect("model state serializes")
}

pub fn deserialize_model(bytes: &[u8]) -> Result<TrainedModel, ModelError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| ModelError::CorruptDocument(e.to_string()))?;
    let found = v
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| ModelError::CorruptDocument("missing schema_version".into()))?;
    if found != SCHEMA_VERSION {
        return Err(ModelError::VersionMismatch { found, expected: SCHEMA_VERSION });
    }
    let doc: DocumentIn = serde_json::from_value(v).map_err(|e| ModelError::CorruptDocument(e.to_string()))?;
    Ok(TrainedModel { spec: doc.spec, feature_names: doc.state.feature_names, roster: doc.state.roster, state: doc.state.model })
}
