//! Gradient-boosted regression trees with softmax or squared loss.
//!
//! Each round fits one tree per output to the negative gradient with the
//! variance criterion, then replaces every leaf by the Newton step
//! `sum(g) / (sum(h) + l2)` scaled by the learning rate.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build_tree, normalize, Columns, TreeParams, Tree, Variance};
use crate::rng::child_rng;
use crate::table::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub subsample: f64,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Number of classes, or `None` for regression.
    pub n_classes: Option<usize>,
    /// Initial raw score per output.
    pub init: Vec<f64>,
    /// `rounds[r][k]` is the tree for output `k` in round `r`.
    pub rounds: Vec<Vec<Tree>>,
    pub importance: Vec<f64>,
}

pub(crate) enum GbtTarget<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

/// Prior probabilities are floored here before taking logs.
const MIN_PRIOR: f64 = 1e-12;

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

impl GbtModel {
    pub(crate) fn fit(x: &Matrix, target: GbtTarget<'_>, params: &GbtParams, names: &[String], seed: u64) -> Self {
        let n = x.n_rows();
        let data = Columns::new(x, true);
        let (n_out, init, n_classes) = match &target {
            GbtTarget::Classes { labels, n_classes } => {
                let mut c = vec![0.0; *n_classes];
                for &l in labels.iter() {
                    c[l] += 1.0;
                }
                let init = c.iter().map(|v| (v / n as f64).max(MIN_PRIOR).ln()).collect();
                (*n_classes, init, Some(*n_classes))
            }
            GbtTarget::Values(y) => (1, vec![y.iter().sum::<f64>() / n as f64], None),
        };
        // Raw scores, row-major n × n_out.
        let mut f: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect::<Vec<f64>>();
        let mut rounds = Vec::with_capacity(params.n_rounds);
        let mut importance = vec![0.0; x.n_cols()];
        let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        for r in 0..params.n_rounds {
            let mut rng = child_rng(seed, r as u64);
            let mut weights = vec![1.0; n];
            if n_sub < n {
                weights.iter_mut().for_each(|w| *w = 0.0);
                for i in sample(&mut rng, n, n_sub).iter() {
                    weights[i] = 1.0;
                }
            }
            // Gradients g (negative gradient) and hessians h per output.
            let (g, h): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match &target {
                GbtTarget::Classes { labels, .. } => {
                    let mut g = vec![vec![0.0; n]; n_out];
                    let mut h = vec![vec![0.0; n]; n_out];
                    let mut p = vec![0.0; n_out];
                    for i in 0..n {
                        p.copy_from_slice(&f[i * n_out..(i + 1) * n_out]);
                        softmax_in_place(&mut p);
                        for k in 0..n_out {
                            let y = if labels[i] == k { 1.0 } else { 0.0 };
                            g[k][i] = y - p[k];
                            h[k][i] = p[k] * (1.0 - p[k]);
                        }
                    }
                    (g, h)
                }
                GbtTarget::Values(y) => (vec![(0..n).map(|i| y[i] - f[i]).collect()], vec![vec![1.0; n]]),
            };
            let trees: Vec<(Tree, Vec<f64>)> = (0..n_out)
                .into_par_iter()
                .map(|k| {
                    let mut tree_rng = child_rng(seed ^ 0x5EED, (r * n_out + k) as u64);
                    let out = build_tree(&Variance { y: &g[k] }, &data, &weights, &params.tree, names, &mut tree_rng);
                    let mut tree = out.tree;
                    for (node, rows) in out.leaves {
                        let (sg, sh) = rows.iter().fold((0.0, 0.0), |(a, b), &i| (a + g[k][i as usize], b + h[k][i as usize]));
                        let denom = sh + params.l2;
                        let v = if denom > 0.0 { params.learning_rate * sg / denom } else { 0.0 };
                        tree.set_leaf_value(node, vec![v]);
                    }
                    (tree, out.importance)
                })
                .collect();
            let mut round = Vec::with_capacity(n_out);
            for (k, (tree, imp)) in trees.into_iter().enumerate() {
                for i in 0..n {
                    f[i * n_out + k] += tree.predict_row(x.row(i))[0];
                }
                for (a, v) in importance.iter_mut().zip(imp) {
                    *a += v;
                }
                round.push(tree);
            }
            rounds.push(round);
        }
        normalize(&mut importance);
        Self { n_classes, init, rounds, importance }
    }

    /// Raw additive scores, one column per output.
    pub fn raw(&self, x: &Matrix) -> Matrix {
        let n_out = self.init.len();
        let rows: Vec<Vec<f64>> = (0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mut z = self.init.clone();
                for round in &self.rounds {
                    for (k, t) in round.iter().enumerate() {
                        z[k] += t.predict_row(row)[0];
                    }
                }
                z
            })
            .collect();
        if rows.is_empty() {
            return Matrix::zeros(0, n_out);
        }
        Matrix::from_rows(&rows)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut z = self.raw(x);
        for i in 0..z.n_rows() {
            softmax_in_place(z.row_mut(i));
        }
        z
    }

    pub fn predict_value(&self, x: &Matrix) -> Vec<f64> {
        self.raw(x).column(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn params(n_rounds: usize) -> GbtParams {
        GbtParams {
            n_rounds,
            learning_rate: 0.1,
            l2: 1.0,
            subsample: 1.0,
            tree: TreeParams { max_depth: Some(3), ..Default::default() },
        }
    }

    #[test]
    fn regression_loss_decreases_with_rounds() {
        let mut rng = rng_from_seed(1);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random::<f64>() * 6.0, rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].sin() + 0.1 * r[1]).collect();
        let x = Matrix::from_rows(&rows);
        let names = vec!["a".to_string(), "b".to_string()];
        let mse = |m: &GbtModel| {
            let p = m.predict_value(&x);
            p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
        };
        let m0 = GbtModel::fit(&x, GbtTarget::Values(&y), &params(0), &names, 0);
        let m10 = GbtModel::fit(&x, GbtTarget::Values(&y), &params(10), &names, 0);
        let m100 = GbtModel::fit(&x, GbtTarget::Values(&y), &params(100), &names, 0);
        assert!(mse(&m10) < mse(&m0));
        assert!(mse(&m100) < mse(&m10));
        assert!(mse(&m100) < 0.01);
        assert!(m100.importance[0] > m100.importance[1]);
    }

    #[test]
    fn multiclass_probabilities() {
        let mut rng = rng_from_seed(2);
        let rows: Vec<Vec<f64>> = (0..240).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let labels: Vec<usize> = rows.iter().map(|r| (r[0] * 3.0).floor() as usize).collect();
        let x = Matrix::from_rows(&rows);
        let names = vec!["a".to_string(), "b".to_string()];
        let m = GbtModel::fit(&x, GbtTarget::Classes { labels: &labels, n_classes: 3 }, &params(50), &names, 0);
        let p = m.predict_proba(&x);
        let mut correct = 0;
        for i in 0..x.n_rows() {
            let row = p.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let arg = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            correct += usize::from(arg == labels[i]);
        }
        assert!(correct >= 235, "{correct}");
    }

    #[test]
    fn zero_rounds_give_priors() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let labels = [0, 1, 1, 1];
        let m = GbtModel::fit(&x, GbtTarget::Classes { labels: &labels, n_classes: 2 }, &params(0), &["a".into()], 0);
        let p = m.predict_proba(&x);
        assert!((p.get(0, 0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn subsampling_is_seeded() {
        let mut rng = rng_from_seed(4);
        let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0).collect();
        let x = Matrix::from_rows(&rows);
        let mut p = params(5);
        p.subsample = 0.5;
        let names = vec!["a".to_string()];
        let a = GbtModel::fit(&x, GbtTarget::Values(&y), &p, &names, 3);
        let b = GbtModel::fit(&x, GbtTarget::Values(&y), &p, &names, 3);
        let c = GbtModel::fit(&x, GbtTarget::Values(&y), &p, &names, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
