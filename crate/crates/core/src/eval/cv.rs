use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_classification, ConfusionMatrix, MetricsReport};
use super::regression::{regression_metrics, RegressionReport};
use super::splits::{complement, kfold_target, split_target, Split};
use super::EvalError;
use crate::models::Task;
use crate::preprocess::{Pipeline, PipelineSpec};
use crate::qsystem::ZoneTag;
use crate::table::{Features, Target};

/// Scores of one fitted pipeline on one held-out set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub n_train: usize,
    pub n_test: usize,
    pub roster: Option<Vec<String>>,
    pub metrics: Option<MetricsReport>,
    pub confusion: Option<ConfusionMatrix>,
    pub regression: Option<RegressionReport>,
    pub fitted_hash: String,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Headline scalar metrics as `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in self.scalars() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }

    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        if let Some(m) = &self.metrics {
            out.push(("accuracy", m.accuracy));
            out.push(("balanced_accuracy", m.balanced_accuracy));
            out.push(("precision_macro", m.precision_macro));
            out.push(("f1_macro", m.f1_macro));
            if let Some(a) = m.roc_auc_macro {
                out.push(("roc_auc_macro", a));
            }
        }
        if let Some(r) = &self.regression {
            out.push(("r2", r.r2));
            out.push(("mse", r.mse));
            out.push(("mae", r.mae));
        }
        out
    }
}

/// Scores a fitted pipeline on the given rows.
pub fn score(p: &Pipeline, x: &Features, y: &Target, n_train: usize) -> Result<EvalReport, EvalError> {
    let hash = p.fitted_hash().ok_or(EvalError::Pipeline(crate::preprocess::PreprocessError::NotFitted))?;
    let task = p.spec.model.task;
    let mut report = EvalReport {
        task,
        n_train,
        n_test: x.n_rows(),
        roster: p.roster().map(<[String]>::to_vec),
        metrics: None,
        confusion: None,
        regression: None,
        fitted_hash: hash,
    };
    match y {
        Target::Classes(c) => {
            let proba = p.predict_proba(x)?;
            let pred = p.predict(x)?;
            let (m, cm) = evaluate_classification(&c.labels, &pred, Some(&proba), &c.roster)?;
            report.metrics = Some(m);
            report.confusion = Some(cm);
        }
        Target::Values(v) => {
            report.regression = Some(regression_metrics(v, &p.predict_value(x)?)?);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub split: Split,
    pub report: EvalReport,
}

/// Split, fit on the training part, score on the test part.
pub fn holdout_eval(spec: &PipelineSpec, x: &Features, y: &Target, test_fraction: f64, seed: u64) -> Result<(HoldoutResult, Pipeline), EvalError> {
    let split = split_target(y, test_fraction, seed)?;
    if split.test.is_empty() {
        return Err(EvalError::BadInput("holdout needs a non-empty test set".into()));
    }
    let mut p = Pipeline::new(spec.clone());
    p.fit(&x.select_rows(&split.train), &y.select(&split.train))?;
    let report = score(&p, &x.select_rows(&split.test), &y.select(&split.test), split.train.len())?;
    Ok((HoldoutResult { split, report }, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    /// Held-out row indices per fold.
    pub folds: Vec<Vec<usize>>,
    pub reports: Vec<EvalReport>,
    pub summary: BTreeMap<String, Spread>,
}

impl CvResult {
    pub fn spread(&self, metric: &str) -> Option<Spread> {
        self.summary.get(metric).copied()
    }
}

/// A fresh pipeline per fold, fitted on the other k-1 folds. Folds run in
/// parallel; reports are kept in fold order.
pub fn kfold_cv(spec: &PipelineSpec, x: &Features, y: &Target, k: usize, seed: u64) -> Result<CvResult, EvalError> {
    let folds = kfold_target(y, k, seed)?;
    let n = x.n_rows();
    let reports = folds
        .par_iter()
        .map(|test| {
            let train = complement(n, test);
            let mut p = Pipeline::new(spec.clone());
            p.fit(&x.select_rows(&train), &y.select(&train))?;
            score(&p, &x.select_rows(test), &y.select(test), train.len())
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut summary = BTreeMap::new();
    let names: Vec<&str> = reports[0].scalars().iter().map(|(k, _)| *k).collect();
    for name in names {
        let vals: Vec<f64> =
            reports.iter().filter_map(|r| r.scalars().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v)).collect();
        if vals.len() != reports.len() {
            continue;
        }
        summary.insert(
            name.to_string(),
            Spread {
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            },
        );
    }
    Ok(CvResult { k, seed, folds, reports, summary })
}

/// Classification metrics over the rows tagged `zone` only.
pub fn zone_filtered_eval(
    p: &Pipeline,
    x: &Features,
    y: &Target,
    zones: &[ZoneTag],
    zone: ZoneTag,
) -> Result<(MetricsReport, ConfusionMatrix), EvalError> {
    let Target::Classes(c) = y else {
        return Err(EvalError::BadInput("zone evaluation needs class labels".into()));
    };
    let idx: Vec<usize> = (0..zones.len()).filter(|&i| zones[i] == zone).collect();
    if idx.is_empty() {
        return Err(EvalError::EmptySubset);
    }
    let xs = x.select_rows(&idx);
    let ys = c.select(&idx);
    let proba = p.predict_proba(&xs)?;
    let pred = p.predict(&xs)?;
    evaluate_classification(&ys.labels, &pred, Some(&proba), &ys.roster)
}
