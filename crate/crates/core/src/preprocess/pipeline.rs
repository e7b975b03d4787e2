use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::outliers::OutlierMethod;
use super::resample::{regression_resample, DEFAULT_PER_BIN_TARGET};
use super::scaler::{fit_scaler, Scaler, ScalerKind};
use super::smote::smote_oversample;
use super::PreprocessError;
use crate::models::{fit, serialize_model, ModelSpec, Task, TrainedModel};
use crate::rng::derive_seed;
use crate::table::{Features, Matrix, Target};

/// Training-set balancing step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BalanceSpec {
    #[default]
    None,
    /// Classification only: every class up to the majority count.
    Smote {
        #[serde(default = "default_k")]
        k_neighbors: usize,
    },
    /// Regression only: SMOTE within equal-width label bins.
    Bins {
        #[serde(default = "default_bins")]
        n_bins: usize,
        #[serde(default = "default_bin_target")]
        per_bin_target: usize,
        #[serde(default = "default_k")]
        k_neighbors: usize,
    },
}

fn default_k() -> usize {
    5
}

fn default_bins() -> usize {
    10
}

fn default_bin_target() -> usize {
    DEFAULT_PER_BIN_TARGET
}

impl BalanceSpec {
    /// Short names used on the command line: `none`, `smote`, `bins`.
    pub fn from_name(s: &str) -> Result<Self, PreprocessError> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(BalanceSpec::None),
            "smote" => Ok(BalanceSpec::Smote { k_neighbors: default_k() }),
            "bins" | "resample" => Ok(BalanceSpec::Bins {
                n_bins: default_bins(),
                per_bin_target: default_bin_target(),
                k_neighbors: default_k(),
            }),
            _ => Err(PreprocessError::BadParameter(format!("unknown balancer '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BalanceSpec::None => "none",
            BalanceSpec::Smote { .. } => "smote",
            BalanceSpec::Bins { .. } => "bins",
        }
    }
}

/// Outlier mask, then scaler, then balancer, then model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    #[serde(default)]
    pub outliers: OutlierMethod,
    #[serde(default)]
    pub scaler: ScalerKind,
    #[serde(default)]
    pub balance: BalanceSpec,
    pub model: ModelSpec,
    /// Seeds the outlier mask and balancer; the model uses its own seed.
    #[serde(default)]
    pub seed: u64,
}

impl PipelineSpec {
    pub fn new(model: ModelSpec) -> Self {
        Self { outliers: OutlierMethod::None, scaler: ScalerKind::MinMax, balance: BalanceSpec::None, model, seed: 0 }
    }

    /// Sets the pipeline seed and derives the model seed from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.model = self.model.with_seed(derive_seed(seed, 3));
        self
    }
}

/// Row accounting for one fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitStats {
    pub n_input: usize,
    pub n_outliers_dropped: usize,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub scaler: Scaler,
    pub model: TrainedModel,
    pub stats: FitStats,
}

impl FittedPipeline {
    /// SHA-256 over every fitted parameter; equal hashes mean bit-identical state.
    pub fn fitted_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.scaler).expect("scaler serializes"));
        h.update(serialize_model(&self.model));
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub spec: PipelineSpec,
    pub fitted: Option<FittedPipeline>,
}

impl Pipeline {
    pub fn new(spec: PipelineSpec) -> Self {
        Self { spec, fitted: None }
    }

    /// Each step is fitted on the training rows as transformed by the steps
    /// before it. Refitting replaces the previous state.
    pub fn fit(&mut self, x: &Features, y: &Target) -> Result<&FittedPipeline, PreprocessError> {
        let task = self.spec.model.task;
        match (task, y, &self.spec.balance) {
            (Task::Classification, Target::Values(_), _) | (Task::Regression, Target::Classes(_), _) => {
                return Err(PreprocessError::TaskMismatch(format!("{task} model with the other target type")));
            }
            (Task::Regression, _, BalanceSpec::Smote { .. }) => {
                return Err(PreprocessError::TaskMismatch("smote balances classes; use bins for regression".into()));
            }
            (Task::Classification, _, BalanceSpec::Bins { .. }) => {
                return Err(PreprocessError::TaskMismatch("bins resampling is for regression".into()));
            }
            _ => {}
        }
        let n_input = x.n_rows();
        let keep = self.spec.outliers.mask(&x.matrix, derive_seed(self.spec.seed, 1))?;
        let kept: Vec<usize> = (0..n_input).filter(|&i| keep[i]).collect();
        let (x1, y1) = if kept.len() == n_input { (x.matrix.clone(), y.clone()) } else { (x.matrix.select_rows(&kept), y.select(&kept)) };

        let scaler = fit_scaler(&x1, self.spec.scaler)?;
        let xs = scaler.transform(&x1);

        let balance_seed = derive_seed(self.spec.seed, 2);
        let (xb, yb, n_synthetic): (Matrix, Target, usize) = match (&self.spec.balance, y1) {
            (BalanceSpec::None, y1) => (xs, y1, 0),
            (BalanceSpec::Smote { k_neighbors }, Target::Classes(c)) => {
                let r = smote_oversample(&xs, &c, *k_neighbors, None, balance_seed)?;
                let n = r.n_synthetic();
                (r.x, Target::Classes(r.y), n)
            }
            (BalanceSpec::Bins { n_bins, per_bin_target, k_neighbors }, Target::Values(v)) => {
                let r = regression_resample(&xs, &v, *n_bins, *per_bin_target, *k_neighbors, balance_seed)?;
                let n = r.origins.len();
                (r.x, Target::Values(r.y), n)
            }
            _ => unreachable!("checked above"),
        };
        let model = fit(&self.spec.model, &Features::new(x.names.clone(), xb), &yb)?;
        self.fitted = Some(FittedPipeline {
            scaler,
            model,
            stats: FitStats { n_input, n_outliers_dropped: n_input - kept.len(), n_synthetic },
        });
        Ok(self.fitted.as_ref().expect("just set"))
    }

    fn state(&self) -> Result<&FittedPipeline, PreprocessError> {
        self.fitted.as_ref().ok_or(PreprocessError::NotFitted)
    }

    fn scaled(&self, x: &Features) -> Result<(Features, &TrainedModel), PreprocessError> {
        let s = self.state()?;
        if x.names != s.model.feature_names {
            // Let the model report the contract mismatch.
            return Ok((x.clone(), &s.model));
        }
        Ok((Features::new(x.names.clone(), s.scaler.transform(&x.matrix)), &s.model))
    }

    pub fn predict(&self, x: &Features) -> Result<Vec<usize>, PreprocessError> {
        let (xs, m) = self.scaled(x)?;
        Ok(m.predict(&xs)?)
    }

    pub fn predict_labels(&self, x: &Features) -> Result<Vec<String>, PreprocessError> {
        let (xs, m) = self.scaled(x)?;
        Ok(m.predict_labels(&xs)?)
    }

    pub fn predict_proba(&self, x: &Features) -> Result<Matrix, PreprocessError> {
        let (xs, m) = self.scaled(x)?;
        Ok(m.predict_proba(&xs)?)
    }

    pub fn predict_value(&self, x: &Features) -> Result<Vec<f64>, PreprocessError> {
        let (xs, m) = self.scaled(x)?;
        Ok(m.predict_value(&xs)?)
    }

    pub fn fitted_hash(&self) -> Option<String> {
        self.fitted.as_ref().map(FittedPipeline::fitted_hash)
    }

    pub fn roster(&self) -> Option<&[String]> {
        self.fitted.as_ref().and_then(|f| f.model.roster.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;
    use crate::rng::rng_from_seed;
    use crate::table::ClassLabels;
    use rand::Rng as _;

    fn data(n: usize, seed: u64) -> (Features, Target) {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>() * 10.0, rng.random::<f64>()]).collect();
        // Imbalanced: class 1 only where x0 > 7.
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 7.0)).collect();
        (
            Features::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows)),
            Target::Classes(ClassLabels::new(vec!["lo".into(), "hi".into()], labels)),
        )
    }

    #[test]
    fn predict_before_fit() {
        let p = Pipeline::new(PipelineSpec::new(ModelSpec::new(ModelKind::Knn, Task::Classification)));
        let (x, _) = data(5, 1);
        assert_eq!(p.predict(&x), Err(PreprocessError::NotFitted));
    }

    #[test]
    fn held_out_rows_never_touch_fitted_state() {
        let (x, y) = data(200, 2);
        let train: Vec<usize> = (0..150).collect();
        let test: Vec<usize> = (150..200).collect();
        let mut spec = PipelineSpec::new(ModelSpec::new(ModelKind::Knn, Task::Classification)).with_seed(4);
        spec.balance = BalanceSpec::Smote { k_neighbors: 5 };
        let mut p = Pipeline::new(spec);
        p.fit(&x.select_rows(&train), &y.select(&train)).unwrap();
        let h = p.fitted_hash().unwrap();
        let mut xt = x.select_rows(&test);
        let before = p.predict(&xt).unwrap();
        assert_eq!(before.len(), 50);
        for i in 0..xt.n_rows() {
            xt.matrix.set(i, 0, 1e6);
        }
        p.predict(&xt).unwrap();
        assert_eq!(p.fitted_hash().unwrap(), h);
    }

    #[test]
    fn balancing_touches_training_only_and_is_deterministic() {
        let (x, y) = data(300, 3);
        let mut spec = PipelineSpec::new(
            ModelSpec::new(ModelKind::ExtraTrees, Task::Classification).with_param("n_trees", 20),
        )
        .with_seed(11);
        spec.outliers = OutlierMethod::from_name("both").unwrap();
        spec.balance = BalanceSpec::from_name("smote").unwrap();
        let mut a = Pipeline::new(spec.clone());
        let stats = a.fit(&x, &y).unwrap().stats;
        assert!(stats.n_synthetic > 0 && stats.n_outliers_dropped > 0);
        let mut b = Pipeline::new(spec);
        b.fit(&x, &y).unwrap();
        assert_eq!(a.fitted_hash(), b.fitted_hash());
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        assert_eq!(a.predict(&x).unwrap().len(), 300);
    }

    #[test]
    fn task_and_balancer_mismatch() {
        let (x, y) = data(20, 1);
        let mut spec = PipelineSpec::new(ModelSpec::new(ModelKind::Knn, Task::Classification));
        spec.balance = BalanceSpec::from_name("bins").unwrap();
        assert!(matches!(Pipeline::new(spec).fit(&x, &y), Err(PreprocessError::TaskMismatch(_))));
        let spec = PipelineSpec::new(ModelSpec::new(ModelKind::Knn, Task::Regression));
        assert!(matches!(Pipeline::new(spec).fit(&x, &y), Err(PreprocessError::TaskMismatch(_))));
    }

    #[test]
    fn spec_json_shape() {
        let s: PipelineSpec = serde_json::from_str(
            r#"{"outliers": {"kind": "mad", "threshold": 3.5}, "scaler": "minmax", "balance": {"kind": "smote"},
                "model": {"kind": "knn", "task": "classification", "params": {"k": 3}}}"#,
        )
        .unwrap();
        assert_eq!(s.balance, BalanceSpec::Smote { k_neighbors: 5 });
        assert_eq!(s.model.params["k"], 3);
        let back: PipelineSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn regression_pipeline_with_bins() {
        let mut rng = rng_from_seed(9);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>()]).collect();
        let yv: Vec<f64> = rows.iter().map(|r| r[0].powi(3)).collect();
        let x = Features::unnamed(Matrix::from_rows(&rows));
        let mut spec = PipelineSpec::new(ModelSpec::new(ModelKind::LinearRegression, Task::Regression));
        spec.balance = BalanceSpec::Bins { n_bins: 4, per_bin_target: 60, k_neighbors: 5 };
        let mut p = Pipeline::new(spec);
        let st = p.fit(&x, &Target::Values(yv)).unwrap().stats;
        assert!(st.n_synthetic > 0);
        assert_eq!(p.predict_value(&x).unwrap().len(), 200);
    }
}
