use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::models::{fit, ModelKind, ModelSpec, Task};
use crate::table::{Features, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SulovConfig {
    /// Pairs with |Pearson r| above this compete; the one with lower mutual
    /// information with the label is dropped.
    pub correlation_threshold: f64,
    /// Equal-frequency bins used to discretize continuous values for mutual information.
    pub mi_bins: usize,
    /// Survivors are kept in importance order until this cumulative share.
    pub importance_cutoff: f64,
    pub n_rounds: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for SulovConfig {
    fn default() -> Self {
        Self {
            correlation_threshold: 0.7,
            mi_bins: 10,
            importance_cutoff: 0.95,
            n_rounds: 50,
            max_depth: 3,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SulovResult {
    /// Final selection, in input column order.
    pub selected: Vec<String>,
    /// Survivors of the correlation stage, in input column order.
    pub uncorrelated: Vec<String>,
    /// Zero-variance columns, excluded up front.
    pub degenerate: Vec<String>,
    /// Correlation-stage survivors with normalized importance, most important first.
    pub ranking: Vec<(String, f64)>,
}

/// Pearson correlation; 0 when either side has no spread.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Equal-frequency bin codes; tied values share a bin.
fn quantile_codes(v: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let n = v.len();
    let mut codes = vec![0; n];
    let mut r = 0;
    while r < n {
        let mut end = r;
        while end + 1 < n && v[order[end + 1]] == v[order[r]] {
            end += 1;
        }
        let code = (r * bins / n).min(bins - 1);
        for &i in &order[r..=end] {
            codes[i] = code;
        }
        r = end + 1;
    }
    codes
}

/// Plug-in mutual information in nats between two discrete codings.
fn mi_codes(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let n = a.len() as f64;
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy / ((pa[x] as f64 / n) * (pb[y] as f64 / n))).ln();
            }
        }
    }
    mi
}

/// Mutual information of a continuous feature with the target, both
/// discretized into `bins` equal-frequency bins (class labels are used as is).
pub fn mutual_information(feature: &[f64], y: &Target, bins: usize) -> f64 {
    let fc = quantile_codes(feature, bins);
    match y {
        Target::Classes(c) => mi_codes(&fc, &c.labels),
        Target::Values(v) => mi_codes(&fc, &quantile_codes(v, bins)),
    }
}

/// Correlation elimination followed by importance-based selection.
pub fn sulov_reduce(x: &Features, y: &Target, cfg: &SulovConfig) -> Result<SulovResult, FeatureError> {
    if x.n_cols() < 2 || x.n_rows() != y.len() || x.n_rows() < 2 || cfg.mi_bins < 2 {
        return Err(FeatureError::BadInput);
    }
    let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.matrix.column(j)).collect();
    let mut degenerate = Vec::new();
    let mut live = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        if c.iter().all(|v| *v == c[0]) {
            log::warn!("feature {} has zero variance; excluded from selection", x.names[j]);
            degenerate.push(x.names[j].clone());
        } else {
            live.push(j);
        }
    }
    let mi: Vec<f64> = cols.iter().map(|c| mutual_information(c, y, cfg.mi_bins)).collect();

    // Visit by decreasing mutual information; a kept feature knocks out
    // every live partner above the threshold.
    let mut order = live.clone();
    order.sort_by(|&a, &b| mi[b].total_cmp(&mi[a]).then(a.cmp(&b)));
    let mut removed = vec![false; x.n_cols()];
    for (pos, &a) in order.iter().enumerate() {
        if removed[a] {
            continue;
        }
        for &b in &order[pos + 1..] {
            if !removed[b] && pearson(&cols[a], &cols[b]).abs() > cfg.correlation_threshold {
                removed[b] = true;
            }
        }
    }
    let survivors: Vec<usize> = live.iter().copied().filter(|&j| !removed[j]).collect();
    let names: Vec<String> = survivors.iter().map(|&j| x.names[j].clone()).collect();

    let task = match y {
        Target::Classes(_) => Task::Classification,
        Target::Values(_) => Task::Regression,
    };
    let spec = ModelSpec::new(ModelKind::GradientBoostedTrees, task)
        .with_param("n_rounds", cfg.n_rounds)
        .with_param("max_depth", cfg.max_depth)
        .with_param("min_samples_leaf", cfg.min_samples_leaf)
        .with_seed(cfg.seed);
    let sub = x.select_names(&names).map_err(FeatureError::UnknownFeature)?;
    let model = fit(&spec, &sub, y).map_err(|e| FeatureError::Labels(e.to_string()))?;
    let imp = model.feature_importance().expect("boosted trees report importance");
    let mut rank: Vec<usize> = (0..names.len()).collect();
    rank.sort_by(|&a, &b| imp[b].total_cmp(&imp[a]).then(a.cmp(&b)));
    let mut keep = vec![false; names.len()];
    let mut cum = 0.0;
    for &r in &rank {
        if cum >= cfg.importance_cutoff {
            break;
        }
        keep[r] = true;
        cum += imp[r];
    }
    Ok(SulovResult {
        selected: names.iter().zip(&keep).filter(|(_, k)| **k).map(|(n, _)| n.clone()).collect(),
        uncorrelated: names.clone(),
        degenerate,
        ranking: rank.iter().map(|&r| (names[r].clone(), imp[r])).collect(),
    })
}
