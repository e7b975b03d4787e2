use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::features::stats::median;
use crate::rng::{child_rng, Rng};
use crate::table::Matrix;

pub const DEFAULT_MAD_THRESHOLD: f64 = 3.5;
pub const DEFAULT_CONTAMINATION: f64 = 0.05;

/// Training-row outlier removal. `Both` drops a row flagged by either mask.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierMethod {
    #[default]
    None,
    Mad {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    IsolationForest {
        #[serde(flatten)]
        params: IsolationParams,
    },
    Both {
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(flatten)]
        params: IsolationParams,
    },
}

fn default_threshold() -> f64 {
    DEFAULT_MAD_THRESHOLD
}

impl OutlierMethod {
    /// Short names used on the command line: `none`, `mad`, `iforest`, `both`.
    pub fn from_name(s: &str) -> Result<Self, PreprocessError> {
        let params = IsolationParams::default();
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "none" => Ok(OutlierMethod::None),
            "mad" => Ok(OutlierMethod::Mad { threshold: DEFAULT_MAD_THRESHOLD }),
            "iforest" | "isolationforest" => Ok(OutlierMethod::IsolationForest { params }),
            "both" => Ok(OutlierMethod::Both { threshold: DEFAULT_MAD_THRESHOLD, params }),
            _ => Err(PreprocessError::BadParameter(format!("unknown outlier method '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OutlierMethod::None => "none",
            OutlierMethod::Mad { .. } => "mad",
            OutlierMethod::IsolationForest { .. } => "iforest",
            OutlierMethod::Both { .. } => "both",
        }
    }

    /// Keep-mask over the rows of `x`.
    pub fn mask(&self, x: &Matrix, seed: u64) -> Result<Vec<bool>, PreprocessError> {
        match self {
            OutlierMethod::None => Ok(vec![true; x.n_rows()]),
            OutlierMethod::Mad { threshold } => mad_outlier_mask(x, *threshold),
            OutlierMethod::IsolationForest { params } => isolation_forest_mask(x, params, seed),
            OutlierMethod::Both { threshold, params } => {
                let a = mad_outlier_mask(x, *threshold)?;
                let b = isolation_forest_mask(x, params, seed)?;
                Ok(a.iter().zip(&b).map(|(a, b)| *a && *b).collect())
            }
        }
    }
}

/// Drops a row when any column's modified z-score `0.6745 |x - med| / MAD`
/// exceeds `threshold`. Columns with MAD = 0 carry no dispersion evidence
/// and are skipped.
pub fn mad_outlier_mask(x: &Matrix, threshold: f64) -> Result<Vec<bool>, PreprocessError> {
    if !(threshold > 0.0) {
        return Err(PreprocessError::BadParameter(format!("MAD threshold {threshold} must be positive")));
    }
    if x.n_rows() < 3 {
        return Err(PreprocessError::BadParameter(format!("MAD mask needs at least 3 rows, got {}", x.n_rows())));
    }
    let mut keep = vec![true; x.n_rows()];
    for j in 0..x.n_cols() {
        let col = x.column(j);
        let med = median(&col);
        let dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&dev);
        if mad == 0.0 {
            log::warn!("column {j} has zero MAD; skipped by the outlier mask");
            continue;
        }
        for (k, d) in keep.iter_mut().zip(&dev) {
            if 0.6745 * d / mad > threshold {
                *k = false;
            }
        }
    }
    Ok(keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsolationParams {
    pub trees: usize,
    pub subsample: usize,
    /// Fraction of rows dropped, in (0, 0.5).
    pub contamination: f64,
}

impl Default for IsolationParams {
    fn default() -> Self {
        Self { trees: 100, subsample: 256, contamination: DEFAULT_CONTAMINATION }
    }
}

/// Average path length of an unsuccessful search in a binary search tree of
/// `n` points: `2 H(n-1) - 2 (n-1) / n`, with c(1) = 0.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (n - 1) as f64 / n as f64
}

enum INode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { size: usize },
}

struct ITree {
    nodes: Vec<INode>,
}

impl ITree {
    fn grow(x: &Matrix, rows: Vec<usize>, limit: usize, rng: &mut Rng) -> Self {
        let mut t = ITree { nodes: Vec::new() };
        t.grow_node(x, rows, 0, limit, rng);
        t
    }

    fn grow_node(&mut self, x: &Matrix, rows: Vec<usize>, depth: usize, limit: usize, rng: &mut Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(INode::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        let ranges: Vec<(usize, f64, f64)> = (0..x.n_cols())
            .filter_map(|j| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = x.get(i, j);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let threshold = rng.random_range(lo..hi);
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, feature) < threshold);
        let left = self.grow_node(x, l, depth + 1, limit, rng);
        let right = self.grow_node(x, r, depth + 1, limit, rng);
        self.nodes[id] = INode::Split { feature, threshold, left, right };
        id
    }

    fn path_length(&self, row: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match &self.nodes[node] {
                INode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] < *threshold { *left } else { *right };
                    depth += 1.0;
                }
                INode::Leaf { size } => return depth + average_path_length(*size),
            }
        }
    }
}

/// Anomaly scores `2^(-E[h(x)] / c(psi))` in (0, 1]; higher is more anomalous.
pub fn isolation_scores(x: &Matrix, params: &IsolationParams, seed: u64) -> Result<Vec<f64>, PreprocessError> {
    if params.trees == 0 || params.subsample < 2 {
        return Err(PreprocessError::BadParameter("isolation forest needs trees >= 1 and subsample >= 2".into()));
    }
    let n = x.n_rows();
    if n < 2 {
        return Err(PreprocessError::BadParameter("isolation forest needs at least 2 rows".into()));
    }
    let psi = params.subsample.min(n);
    let limit = (psi as f64).log2().ceil() as usize;
    let per_tree: Vec<Vec<f64>> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = child_rng(seed, t as u64);
            let rows = sample(&mut rng, n, psi).into_vec();
            let tree = ITree::grow(x, rows, limit, &mut rng);
            (0..n).map(|i| tree.path_length(x.row(i))).collect()
        })
        .collect();
    let c = average_path_length(psi);
    let trees = params.trees as f64;
    Ok((0..n)
        .map(|i| {
            let mean = per_tree.iter().map(|h| h[i]).sum::<f64>() / trees;
            2f64.powf(-mean / c)
        })
        .collect())
}

/// Drops the `floor(contamination * n)` highest-scoring rows; equal scores
/// drop the lower row index first.
pub fn isolation_forest_mask(x: &Matrix, params: &IsolationParams, seed: u64) -> Result<Vec<bool>, PreprocessError> {
    let c = params.contamination;
    if !(c > 0.0 && c < 0.5) {
        return Err(PreprocessError::BadContamination(c));
    }
    let scores = isolation_scores(x, params, seed)?;
    let n_drop = (c * x.n_rows() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep = vec![true; scores.len()];
    for &i in &order[..n_drop] {
        keep[i] = false;
    }
    Ok(keep)
}
