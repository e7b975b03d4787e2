use serde::{Deserialize, Serialize};

use crate::table::Matrix;

/// Majority-class / prior-probability classifier, or mean regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DummyModel {
    Classifier { priors: Vec<f64>, majority: usize },
    Regressor { mean: f64 },
}

impl DummyModel {
    /// Majority ties go to the lower class index.
    pub(crate) fn fit_classes(labels: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }
        let mut majority = 0;
        for c in 1..n_classes {
            if counts[c] > counts[majority] {
                majority = c;
            }
        }
        let n = labels.len() as f64;
        DummyModel::Classifier { priors: counts.iter().map(|&c| c as f64 / n).collect(), majority }
    }

    /// The mean is a plain left-to-right sum divided by n, the same
    /// computation the regression metrics use for the label mean.
    pub(crate) fn fit_values(y: &[f64]) -> Self {
        DummyModel::Regressor { mean: y.iter().sum::<f64>() / y.len() as f64 }
    }

    pub fn predict_proba(&self, n_rows: usize) -> Matrix {
        match self {
            DummyModel::Classifier { priors, .. } => {
                let mut m = Matrix::zeros(n_rows, priors.len());
                for i in 0..n_rows {
                    m.row_mut(i).copy_from_slice(priors);
                }
                m
            }
            DummyModel::Regressor { .. } => panic!("predict_proba on a regressor"),
        }
    }

    pub fn predict(&self, n_rows: usize) -> Vec<usize> {
        match self {
            DummyModel::Classifier { majority, .. } => vec![*majority; n_rows],
            DummyModel::Regressor { .. } => panic!("predict on a regressor"),
        }
    }

    pub fn predict_value(&self, n_rows: usize) -> Vec<f64> {
        match self {
            DummyModel::Regressor { mean } => vec![*mean; n_rows],
            DummyModel::Classifier { .. } => panic!("predict_value on a classifier"),
        }
    }
}
