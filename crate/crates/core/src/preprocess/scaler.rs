use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::table::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    /// Train min to 0 and train max to 1; no clipping.
    #[default]
    #[serde(rename = "minmax")]
    MinMax,
    /// Zero mean and unit population standard deviation.
    Standard,
    None,
}

impl ScalerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalerKind::MinMax => "minmax",
            ScalerKind::Standard => "standard",
            ScalerKind::None => "none",
        }
    }
}

impl fmt::Display for ScalerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalerKind {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "minmax" => Ok(ScalerKind::MinMax),
            "standard" => Ok(ScalerKind::Standard),
            "none" | "identity" => Ok(ScalerKind::None),
            _ => Err(PreprocessError::BadParameter(format!("unknown scaler '{s}'"))),
        }
    }
}

/// A fitted per-feature affine map `(x - offset) / scale`. Columns that were
/// constant in training have `scale = 0` and map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub kind: ScalerKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn identity(kind: ScalerKind, n_cols: usize) -> Self {
        Self { kind, offset: vec![0.0; n_cols], scale: vec![1.0; n_cols] }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        if self.kind == ScalerKind::None {
            out.copy_from_slice(row);
            return;
        }
        for ((o, v), (a, s)) in out.iter_mut().zip(row).zip(self.offset.iter().zip(&self.scale)) {
            *o = if *s == 0.0 { 0.0 } else { (v - a) / s };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
        for i in 0..x.n_rows() {
            self.transform_row(x.row(i), out.row_mut(i));
        }
        out
    }
}

/// Fits a scaler on training rows only. Constant columns log a warning.
pub fn fit_scaler(x: &Matrix, kind: ScalerKind) -> Result<Scaler, PreprocessError> {
    let d = x.n_cols();
    if kind == ScalerKind::None {
        return Ok(Scaler::identity(kind, d));
    }
    if x.n_rows() == 0 {
        return Err(PreprocessError::BadParameter("scaler fit needs at least one row".into()));
    }
    let n = x.n_rows() as f64;
    let mut offset = Vec::with_capacity(d);
    let mut scale = Vec::with_capacity(d);
    for j in 0..d {
        let col = x.column(j);
        let (a, s) = match kind {
            ScalerKind::MinMax => {
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            ScalerKind::Standard => {
                let m = col.iter().sum::<f64>() / n;
                let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                (m, v.sqrt())
            }
            ScalerKind::None => unreachable!(),
        };
        if s == 0.0 {
            log::warn!("constant column {j} maps to 0");
        }
        offset.push(a);
        scale.push(s);
    }
    Ok(Scaler { kind, offset, scale })
}

pub fn apply_scaler(scaler: &Scaler, x: &Matrix) -> Matrix {
    scaler.transform(x)
}
