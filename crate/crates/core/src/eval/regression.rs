use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

/// Default log10-space outlier band: a factor of 2 either way.
pub fn default_log_band() -> f64 {
    2f64.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub r2: f64,
    pub mse: f64,
    pub mae: f64,
    pub y_mean: f64,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
    /// `y_pred - y_true`.
    pub residuals: Vec<f64>,
    /// (theoretical, observed) pairs; empty below 3 samples.
    pub qq_points: Vec<(f64, f64)>,
    /// `|y_pred - y_true| > band`, meaningful for log10 labels.
    pub outliers: Vec<bool>,
    pub band: f64,
}

/// R² = 1 - SS_res / SS_tot with the mean as a left-to-right sum over n,
/// MSE and MAE with population denominators.
pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionReport, EvalError> {
    let n = y_true.len();
    if n != y_pred.len() {
        return Err(EvalError::BadInput(format!("{n} labels vs {} predictions", y_pred.len())));
    }
    if n < 2 {
        return Err(EvalError::BadInput("regression metrics need at least 2 samples".into()));
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(EvalError::BadInput("non-finite value".into()));
    }
    let nf = n as f64;
    let y_mean = y_true.iter().sum::<f64>() / nf;
    let ss_tot: f64 = y_true.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::DegenerateVariance);
    }
    let residuals: Vec<f64> = y_pred.iter().zip(y_true).map(|(p, t)| p - t).collect();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    let band = default_log_band();
    Ok(RegressionReport {
        n,
        r2: 1.0 - ss_res / ss_tot,
        mse: ss_res / nf,
        mae: residuals.iter().map(|r| r.abs()).sum::<f64>() / nf,
        y_mean,
        y_true: y_true.to_vec(),
        y_pred: y_pred.to_vec(),
        qq_points: qq_points(&residuals).unwrap_or_default(),
        outliers: log_band_outliers(y_true, y_pred, band),
        residuals,
        band,
    })
}

/// Sorted standardized residuals against standard-normal quantiles at
/// plotting positions `(i - 0.5) / n`.
pub fn qq_points(residuals: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    let n = residuals.len();
    if n < 3 {
        return Err(EvalError::BadInput("QQ points need at least 3 residuals".into()));
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let sd = (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (nf - 1.0)).sqrt();
    let mut obs: Vec<f64> = residuals.iter().map(|r| if sd > 0.0 { (r - mean) / sd } else { 0.0 }).collect();
    obs.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    Ok(obs.into_iter().enumerate().map(|(i, o)| (normal.inverse_cdf((i as f64 + 0.5) / nf), o)).collect())
}

pub fn log_band_outliers(y_true_log: &[f64], y_pred_log: &[f64], band: f64) -> Vec<bool> {
    y_true_log.iter().zip(y_pred_log).map(|(t, p)| (p - t).abs() > band).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCorrection {
    pub a: f64,
    pub b: f64,
    pub corrected: Vec<f64>,
}

impl LinearCorrection {
    pub fn apply(&self, y_pred: &[f64]) -> Vec<f64> {
        y_pred.iter().map(|p| self.a * p + self.b).collect()
    }
}

/// Least squares of `y_true` on `y_pred`.
pub fn residual_linear_correction(y_true: &[f64], y_pred: &[f64]) -> Result<LinearCorrection, EvalError> {
    let n = y_true.len();
    if n != y_pred.len() || n < 3 {
        return Err(EvalError::BadInput("correction needs at least 3 aligned samples".into()));
    }
    let nf = n as f64;
    let mp = y_pred.iter().sum::<f64>() / nf;
    let mt = y_true.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (p, t) in y_pred.iter().zip(y_true) {
        sxy += (p - mp) * (t - mt);
        sxx += (p - mp) * (p - mp);
    }
    if !(sxx > 0.0) {
        return Err(EvalError::DegeneratePredictions);
    }
    let a = sxy / sxx;
    let b = mt - a * mp;
    let mut c = LinearCorrection { a, b, corrected: Vec::new() };
    c.corrected = c.apply(y_pred);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, Normal as NormalDist};

    #[test]
    fn hand_cases() {
        let r = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r.r2 - 0.5).abs() < 1e-15);
        assert!((r.mse - 1.0 / 3.0).abs() < 1e-15);
        let p = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((p.r2, p.mse), (1.0, 0.0));
        assert_eq!(regression_metrics(&[2.0, 2.0], &[1.0, 2.0]), Err(EvalError::DegenerateVariance));
    }

    #[test]
    fn mean_predictor_scores_zero() {
        let y = [0.3, 1.7, -2.0, 5.5, 0.1];
        let m = y.iter().sum::<f64>() / 5.0;
        let r = regression_metrics(&y, &[m; 5]).unwrap();
        assert_eq!(r.r2, 0.0);
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 5.0;
        assert!((r.mse - var).abs() < 1e-12);
    }

    #[test]
    fn log_band_examples() {
        let band = default_log_band();
        assert_eq!(log_band_outliers(&[0.0], &[2.1f64.log10()], band), vec![true]);
        assert_eq!(log_band_outliers(&[0.0], &[1.9f64.log10()], band), vec![false]);
        assert_eq!(log_band_outliers(&[0.5, 1.0], &[0.5, 1.0], band), vec![false, false]);
    }

    #[test]
    fn correction_recovers_half_scale() {
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1).collect();
        let half: Vec<f64> = y.iter().map(|v| 0.5 * v).collect();
        let c = residual_linear_correction(&y, &half).unwrap();
        assert!((c.a - 2.0).abs() < 1e-9 && c.b.abs() < 1e-9);
        let unbiased = residual_linear_correction(&y, &y).unwrap();
        assert!((unbiased.a - 1.0).abs() < 1e-12 && unbiased.b.abs() < 1e-12);
        assert_eq!(residual_linear_correction(&y[..3], &[1.0; 3]), Err(EvalError::DegeneratePredictions));
    }

    #[test]
    fn corrected_residuals_have_zero_mean_and_slope() {
        let mut rng = rng_from_seed(2);
        let noise = NormalDist::new(0.0, 0.3).unwrap();
        let y: Vec<f64> = (0..200).map(|i| i as f64 / 50.0).collect();
        let pred: Vec<f64> = y.iter().map(|v| 0.7 * v + 0.4 + noise.sample(&mut rng)).collect();
        let c = residual_linear_correction(&y, &pred).unwrap();
        let res: Vec<f64> = c.corrected.iter().zip(&y).map(|(p, t)| t - p).collect();
        let mr = res.iter().sum::<f64>() / 200.0;
        assert!(mr.abs() < 1e-9);
        let mp = c.corrected.iter().sum::<f64>() / 200.0;
        let slope: f64 = c.corrected.iter().zip(&res).map(|(p, r)| (p - mp) * r).sum();
        assert!(slope.abs() < 1e-9);
        let before = regression_metrics(&y, &pred).unwrap().mse;
        let after = regression_metrics(&y, &c.corrected).unwrap().mse;
        assert!(after <= before);
    }

    #[test]
    fn qq_of_normal_sample_hugs_identity() {
        let mut rng = rng_from_seed(7);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let r: Vec<f64> = (0..1000).map(|_| d.sample(&mut rng)).collect();
        let q = qq_points(&r).unwrap();
        let worst = q.iter().map(|(t, o)| (t - o).abs()).fold(0.0, f64::max);
        // Extreme order statistics wander far more than 0.15 (the full-range
        // maximum has a median near 0.39 at n = 1000), so the bound is held on
        // the central 90% of points.
        let body = q[50..950].iter().map(|(t, o)| (t - o).abs()).fold(0.0, f64::max);
        eprintln!("qq max deviation {worst:.3}, central 90% {body:.3}");
        assert!(body < 0.15);
    }

    #[test]
    fn qq_symmetry_and_left_tail() {
        let sym = [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0];
        let q = qq_points(&sym).unwrap();
        for i in 0..q.len() {
            let j = q.len() - 1 - i;
            assert!((q[i].0 + q[j].0).abs() < 1e-12 && (q[i].1 + q[j].1).abs() < 1e-12);
        }
        let mut rng = rng_from_seed(3);
        let d = NormalDist::new(0.0, 1.0).unwrap();
        let skew: Vec<f64> = (0..500).map(|_| -(d.sample(&mut rng) as f64).powi(2)).collect();
        let q = qq_points(&skew).unwrap();
        assert!(q[..25].iter().all(|(t, o)| o < t));
    }
}
