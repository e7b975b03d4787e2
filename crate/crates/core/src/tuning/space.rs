use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Config, TuningError};
use crate::models::{ModelKind, ModelSpec, Task};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Int { low: i64, high: i64, default: i64 },
    Real { low: f64, high: f64, #[serde(default)] log: bool, default: f64 },
    Categorical { choices: Vec<Value>, default: Value },
}

impl Domain {
    fn validate(&self, name: &str) -> Result<(), String> {
        match self {
            Domain::Int { low, high, default } => {
                if low > high || default < low || default > high {
                    return Err(format!("{name}: int range [{low}, {high}] with default {default}"));
                }
            }
            Domain::Real { low, high, log, default } => {
                if !(low.is_finite() && high.is_finite() && low <= high && default >= low && default <= high) {
                    return Err(format!("{name}: real range [{low}, {high}] with default {default}"));
                }
                if *log && *low <= 0.0 {
                    return Err(format!("{name}: log range must be strictly positive"));
                }
            }
            Domain::Categorical { choices, default } => {
                if choices.is_empty() || !choices.contains(default) {
                    return Err(format!("{name}: default must be one of the choices"));
                }
            }
        }
        Ok(())
    }

    pub fn default_value(&self) -> Value {
        match self {
            Domain::Int { default, .. } => json!(default),
            Domain::Real { default, .. } => json!(default),
            Domain::Categorical { default, .. } => default.clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            Domain::Int { low, high, .. } => v.as_i64().is_some_and(|i| i >= *low && i <= *high),
            Domain::Real { low, high, .. } => v.as_f64().is_some_and(|f| f >= *low && f <= *high),
            Domain::Categorical { choices, .. } => choices.contains(v),
        }
    }

    pub(super) fn sample(&self, rng: &mut Rng) -> Value {
        match self {
            Domain::Int { low, high, .. } => json!(rng.random_range(*low..=*high)),
            Domain::Real { low, high, .. } => json!(self.from_unit(rng.random()).clamp(*low, *high)),
            Domain::Categorical { choices, .. } => choices[rng.random_range(0..choices.len())].clone(),
        }
    }

    /// Position in [0, 1] (log-scaled for log ranges); `None` for categoricals.
    pub(super) fn to_unit(&self, v: &Value) -> Option<f64> {
        let (lo, hi, x) = match self {
            Domain::Int { low, high, .. } => (*low as f64, *high as f64, v.as_f64()?),
            Domain::Real { low, high, log: true, .. } => (low.ln(), high.ln(), v.as_f64()?.ln()),
            Domain::Real { low, high, .. } => (*low, *high, v.as_f64()?),
            Domain::Categorical { .. } => return None,
        };
        Some(if hi > lo { (x - lo) / (hi - lo) } else { 0.5 })
    }

    /// Inverse of [`Domain::to_unit`] before rounding and clipping.
    pub(super) fn from_unit(&self, u: f64) -> f64 {
        match self {
            Domain::Int { low, high, .. } => *low as f64 + u * (*high - *low) as f64,
            Domain::Real { low, high, log: true, .. } => (low.ln() + u * (high.ln() - low.ln())).exp(),
            Domain::Real { low, high, .. } => low + u * (high - low),
            Domain::Categorical { .. } => f64::NAN,
        }
    }

    /// Value at unit position `u`, rounded for integers and clipped to bounds.
    pub(super) fn value_at(&self, u: f64) -> Value {
        let u = u.clamp(0.0, 1.0);
        match self {
            Domain::Int { low, high, .. } => json!((self.from_unit(u).round() as i64).clamp(*low, *high)),
            Domain::Real { low, high, .. } => json!(self.from_unit(u).clamp(*low, *high)),
            Domain::Categorical { .. } => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

impl Param {
    pub fn new(name: &str, domain: Domain) -> Self {
        Self { name: name.to_string(), domain }
    }
}

/// Ordered hyperparameter domains; the order fixes sampling and export
/// column order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace {
    pub params: Vec<Param>,
}

impl SearchSpace {
    pub fn new(params: Vec<Param>) -> Self {
        Self { params }
    }

    pub fn validate(&self) -> Result<(), TuningError> {
        for (i, p) in self.params.iter().enumerate() {
            p.domain.validate(&p.name).map_err(TuningError::BadSpace)?;
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(TuningError::BadSpace(format!("duplicate parameter '{}'", p.name)));
            }
        }
        Ok(())
    }

    pub fn defaults(&self) -> Config {
        self.params.iter().map(|p| (p.name.clone(), p.domain.default_value())).collect()
    }

    pub fn contains(&self, c: &Config) -> bool {
        c.len() == self.params.len() && self.params.iter().all(|p| c.get(&p.name).is_some_and(|v| p.domain.contains(v)))
    }

    pub(super) fn sample(&self, rng: &mut Rng) -> Config {
        self.params.iter().map(|p| (p.name.clone(), p.domain.sample(rng))).collect()
    }

    pub fn from_json(s: &str) -> Result<Self, TuningError> {
        let space: SearchSpace = serde_json::from_str(s).map_err(|e| TuningError::BadSpace(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    fn prefixed(mut self, prefix: &str) -> Self {
        for p in &mut self.params {
            p.name = format!("{prefix}.{}", p.name);
        }
        self
    }
}

fn int(name: &str, low: i64, high: i64, default: i64) -> Param {
    Param::new(name, Domain::Int { low, high, default })
}

fn real(name: &str, low: f64, high: f64, log: bool, default: f64) -> Param {
    Param::new(name, Domain::Real { low, high, log, default })
}

fn cat(name: &str, choices: Vec<Value>, default: Value) -> Param {
    Param::new(name, Domain::Categorical { choices, default })
}

/// Shipped search space for a model spec. Every default equals the
/// learner's own default, so trial 0 is the untuned model. Voting specs get
/// each member's space under a `member.` prefix.
pub fn default_space(spec: &ModelSpec) -> SearchSpace {
    let depth = || cat("max_depth", vec![Value::Null, json!(4), json!(8), json!(12), json!(16), json!(24)], Value::Null);
    let mf_default = if spec.task == Task::Classification { json!("sqrt") } else { json!("all") };
    let mf = |d: Value| cat("max_features", vec![json!("sqrt"), json!("log2"), json!("all")], d);
    let params = match spec.kind {
        ModelKind::Knn => vec![
            int("k", 1, 50, 5),
            cat("distance_metric", vec![json!("manhattan"), json!("euclidean")], json!("manhattan")),
            cat("weights", vec![json!("uniform"), json!("distance")], json!("uniform")),
        ],
        ModelKind::DecisionTree => vec![depth(), int("min_samples_split", 2, 20, 2), int("min_samples_leaf", 1, 20, 1), mf(json!("all"))],
        ModelKind::RandomForest | ModelKind::ExtraTrees => vec![
            int("n_trees", 20, 300, 100),
            depth(),
            int("min_samples_leaf", 1, 20, 1),
            mf(mf_default),
        ],
        ModelKind::GradientBoostedTrees => vec![
            int("n_rounds", 20, 400, 100),
            real("learning_rate", 0.01, 0.5, true, 0.1),
            int("max_depth", 1, 8, 3),
            real("l2", 1e-3, 10.0, true, 1.0),
            real("subsample", 0.5, 1.0, false, 1.0),
        ],
        ModelKind::LogisticRegression => vec![real("l2", 1e-6, 1.0, true, 1e-4)],
        ModelKind::LinearRegression => vec![real("l2", 0.0, 10.0, false, 0.0)],
        ModelKind::Dummy => Vec::new(),
        ModelKind::Voting => {
            let mut out = Vec::new();
            for m in &spec.members {
                out.extend(default_space(&m.spec).prefixed(&m.name).params);
            }
            out
        }
    };
    SearchSpace::new(params)
}
