use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::table::Matrix;

/// Rows per gradient chunk. Fixed so the summation order, and therefore the
/// fitted weights, do not depend on the thread count.
const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2: f64,
    /// Step size; `None` uses the inverse of a curvature bound.
    pub learning_rate: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

/// Multinomial logistic regression fitted by full-batch gradient descent on
/// mean cross-entropy plus `l2 / 2 * |W|²` (intercepts unpenalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `coef[k]` holds the intercept followed by one weight per feature.
    pub coef: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

fn scores(coef: &[Vec<f64>], row: &[f64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(coef) {
        *o = c[0] + c[1..].iter().zip(row).map(|(w, x)| w * x).sum::<f64>();
    }
}

impl LogisticModel {
    /// Requires at least two classes present in `labels`.
    pub(crate) fn fit(x: &Matrix, labels: &[usize], n_classes: usize, p: &LogisticParams) -> Self {
        let d = x.n_cols();
        let max_sq = x.rows_iter().map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
        let lr = p.learning_rate.unwrap_or(1.0 / (0.5 * max_sq + p.l2));
        let mut coef = vec![vec![0.0; d + 1]; n_classes];
        let mut prev = f64::INFINITY;
        let mut it = 0;
        let mut converged = false;
        let mut loss = f64::NAN;
        while it < p.max_iter {
            let (l, grad) = Self::loss_grad(x, labels, &coef, p.l2);
            loss = l;
            if (prev - loss).abs() < p.tol {
                converged = true;
                break;
            }
            prev = loss;
            for (c, g) in coef.iter_mut().zip(&grad) {
                for (w, gw) in c.iter_mut().zip(g) {
                    *w -= lr * gw;
                }
            }
            it += 1;
        }
        Self { coef, iterations: it, converged, final_loss: loss }
    }

    fn loss_grad(x: &Matrix, labels: &[usize], coef: &[Vec<f64>], l2: f64) -> (f64, Vec<Vec<f64>>) {
        let (n, d, k) = (x.n_rows(), x.n_cols(), coef.len());
        let n_chunks = n.div_ceil(CHUNK);
        let parts: Vec<(f64, Vec<Vec<f64>>)> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut loss = 0.0;
                let mut g = vec![vec![0.0; d + 1]; k];
                let mut z = vec![0.0; k];
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    let row = x.row(i);
                    scores(coef, row, &mut z);
                    softmax(&mut z);
                    loss -= z[labels[i]].max(1e-300).ln();
                    for (kk, gk) in g.iter_mut().enumerate() {
                        let r = z[kk] - if labels[i] == kk { 1.0 } else { 0.0 };
                        gk[0] += r;
                        for (gw, xv) in gk[1..].iter_mut().zip(row) {
                            *gw += r * xv;
                        }
                    }
                }
                (loss, g)
            })
            .collect();
        let mut loss = 0.0;
        let mut grad = vec![vec![0.0; d + 1]; k];
        for (l, g) in parts {
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
        let nf = n as f64;
        loss /= nf;
        for (gk, ck) in grad.iter_mut().zip(coef) {
            gk[0] /= nf;
            for j in 1..=d {
                gk[j] = gk[j] / nf + l2 * ck[j];
                loss += 0.5 * l2 * ck[j] * ck[j];
            }
        }
        (loss, grad)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let k = self.coef.len();
        let mut out = Matrix::zeros(x.n_rows(), k);
        for i in 0..x.n_rows() {
            let z = out.row_mut(i);
            scores(&self.coef, x.row(i), z);
            softmax(z);
        }
        out
    }
}

/// Ordinary least squares with optional ridge penalty on the slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub(crate) fn fit(x: &Matrix, y: &[f64], l2: f64) -> Self {
        let (n, d) = (x.n_rows(), x.n_cols());
        let nf = n as f64;
        let xm: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / nf).collect();
        let ym = y.iter().sum::<f64>() / nf;
        // Normal equations on centered data.
        let mut a = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        for (i, row) in x.rows_iter().enumerate() {
            let yc = y[i] - ym;
            for p in 0..d {
                let xp = row[p] - xm[p];
                b[p] += xp * yc;
                for q in 0..=p {
                    a[p][q] += xp * (row[q] - xm[q]);
                }
            }
        }
        for p in 0..d {
            for q in 0..p {
                a[q][p] = a[p][q];
            }
            a[p][p] += l2;
        }
        let coef = solve_spd(a, b);
        let intercept = ym - coef.iter().zip(&xm).map(|(c, m)| c * m).sum::<f64>();
        Self { intercept, coef }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter()
            .map(|r| self.intercept + self.coef.iter().zip(r).map(|(c, v)| c * v).sum::<f64>())
            .collect()
    }
}

/// Solves `a w = b` for symmetric positive semi-definite `a` by Cholesky,
/// adding growing diagonal jitter when `a` is singular.
pub(crate) fn solve_spd(a: Vec<Vec<f64>>, b: Vec<f64>) -> Vec<f64> {
    let d = b.len();
    if d == 0 {
        return Vec::new();
    }
    let trace: f64 = (0..d).map(|i| a[i][i]).sum::<f64>().max(1e-300);
    let mut jitter = 0.0;
    loop {
        if let Some(l) = cholesky(&a, jitter) {
            let mut z = vec![0.0; d];
            for i in 0..d {
                let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
                z[i] = (b[i] - s) / l[i][i];
            }
            let mut w = vec![0.0; d];
            for i in (0..d).rev() {
                let s: f64 = (i + 1..d).map(|k| l[k][i] * w[k]).sum();
                w[i] = (z[i] - s) / l[i][i];
            }
            return w;
        }
        jitter = if jitter == 0.0 { 1e-12 * trace / d as f64 } else { jitter * 10.0 };
    }
}

fn cholesky(a: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let d = a.len();
    let scale = (0..d).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] + jitter - s;
                if v <= 1e-13 * scale {
                    return None;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}
