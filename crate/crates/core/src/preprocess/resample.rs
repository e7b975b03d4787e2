use super::smote::{draw_origins, interpolate, SyntheticOrigin};
use super::PreprocessError;
use crate::rng::child_rng;
use crate::table::Matrix;

pub const DEFAULT_PER_BIN_TARGET: usize = 1000;

/// Input rows first, then the synthetic rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleResult {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub origins: Vec<SyntheticOrigin>,
    /// Row count per equal-width label bin before resampling.
    pub bin_counts_before: Vec<usize>,
}

/// Equal-width bin index of each label over `[min, max]`; the maximum
/// falls in the last bin.
pub fn label_bins(y: &[f64], n_bins: usize) -> Vec<usize> {
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / n_bins as f64;
    y.iter()
        .map(|v| if w > 0.0 { (((v - lo) / w).floor() as usize).min(n_bins - 1) } else { 0 })
        .collect()
}

/// SMOTE within label bins. Bins below `per_bin_target` are topped up; a
/// synthetic label is interpolated with the same lambda as its features.
/// Bins with a single row are skipped with a warning. Never removes rows.
pub fn regression_resample(
    x: &Matrix,
    y: &[f64],
    n_bins: usize,
    per_bin_target: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<ResampleResult, PreprocessError> {
    if n_bins < 2 {
        return Err(PreprocessError::BadParameter(format!("n_bins must be at least 2, got {n_bins}")));
    }
    if k_neighbors == 0 {
        return Err(PreprocessError::BadParameter("k_neighbors must be at least 1".into()));
    }
    if y.len() != x.n_rows() || y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(PreprocessError::BadParameter("labels must be finite and match the rows".into()));
    }
    let bins = label_bins(y, n_bins);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (i, &b) in bins.iter().enumerate() {
        members[b].push(i);
    }
    let mut out = x.clone();
    let mut labels = y.to_vec();
    let mut origins = Vec::new();
    for (b, m) in members.iter().enumerate() {
        if m.is_empty() || m.len() >= per_bin_target {
            continue;
        }
        if m.len() < 2 {
            log::warn!("label bin {b} has {} row; skipped by resampling", m.len());
            continue;
        }
        let mut rng = child_rng(seed, b as u64);
        for o in draw_origins(x, m, per_bin_target - m.len(), k_neighbors, &mut rng) {
            out.push_row(&interpolate(x, &o));
            labels.push(y[o.base] + o.lambda * (y[o.neighbor] - y[o.base]));
            origins.push(o);
        }
    }
    Ok(ResampleResult { x: out, y: labels, origins, bin_counts_before: members.iter().map(Vec::len).collect() })
}
