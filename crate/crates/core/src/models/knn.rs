use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::table::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Manhattan,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Distance,
}

/// The `k` nearest rows of `train` to `query` as `(distance, row)`, nearest
/// first; equal distances order by row index. `skip` excludes one row.
pub fn k_nearest(train: &Matrix, query: &[f64], k: usize, metric: Metric, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = (0..train.n_rows())
        .filter(|&j| Some(j) != skip)
        .map(|j| (metric.distance(query, train.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d
}

/// Neighbor weights; with distance weighting, exact matches take all the weight.
fn weights(neigh: &[(f64, usize)], w: Weighting) -> Vec<f64> {
    match w {
        Weighting::Uniform => vec![1.0; neigh.len()],
        Weighting::Distance => {
            if neigh.iter().any(|(d, _)| *d == 0.0) {
                neigh.iter().map(|(d, _)| if *d == 0.0 { 1.0 } else { 0.0 }).collect()
            } else {
                neigh.iter().map(|(d, _)| 1.0 / d).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnTarget {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Metric,
    pub weights: Weighting,
    pub x: Matrix,
    pub y: KnnTarget,
}

impl KnnModel {
    /// Per row: vote weights per class and summed neighbor distance per class.
    fn votes(&self, x: &Matrix) -> Vec<(Vec<f64>, Vec<f64>)> {
        let KnnTarget::Classes { labels, n_classes } = &self.y else {
            panic!("votes on a regression model");
        };
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let neigh = k_nearest(&self.x, x.row(i), self.k, self.metric, None);
                let w = weights(&neigh, self.weights);
                let mut votes = vec![0.0; *n_classes];
                let mut dist = vec![0.0; *n_classes];
                for ((d, j), wj) in neigh.iter().zip(&w) {
                    votes[labels[*j]] += wj;
                    dist[labels[*j]] += d;
                }
                (votes, dist)
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = self
            .votes(x)
            .into_iter()
            .map(|(v, _)| {
                let s: f64 = v.iter().sum();
                v.iter().map(|c| c / s).collect()
            })
            .collect();
        from_rows_or_empty(&rows, self.n_outputs())
    }

    /// Most votes; equal votes go to the class with the smaller summed
    /// neighbor distance, then to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        self.votes(x)
            .into_iter()
            .map(|(v, d)| {
                let mut best = 0;
                for c in 1..v.len() {
                    if v[c] > v[best] || (v[c] == v[best] && v[c] > 0.0 && d[c] < d[best]) {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn predict_value(&self, x: &Matrix) -> Vec<f64> {
        let KnnTarget::Values(y) = &self.y else {
            panic!("predict_value on a classification model");
        };
        (0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let neigh = k_nearest(&self.x, x.row(i), self.k, self.metric, None);
                let w = weights(&neigh, self.weights);
                let sw: f64 = w.iter().sum();
                neigh.iter().zip(&w).map(|((_, j), wj)| wj * y[*j]).sum::<f64>() / sw
            })
            .collect()
    }

    fn n_outputs(&self) -> usize {
        match &self.y {
            KnnTarget::Classes { n_classes, .. } => *n_classes,
            KnnTarget::Values(_) => 1,
        }
    }
}

pub(crate) fn from_rows_or_empty(rows: &[Vec<f64>], cols: usize) -> Matrix {
    if rows.is_empty() {
        Matrix::zeros(0, cols)
    } else {
        Matrix::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: usize, x: &[[f64; 2]], labels: &[usize], n_classes: usize) -> KnnModel {
        KnnModel {
            k,
            metric: Metric::Manhattan,
            weights: Weighting::Uniform,
            x: Matrix::from_rows(x),
            y: KnnTarget::Classes { labels: labels.to_vec(), n_classes },
        }
    }

    #[test]
    fn three_point_example() {
        let m = model(3, &[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], &[0, 1, 1], 2);
        let q = Matrix::from_rows(&[[0.0, 0.0]]);
        assert_eq!(m.predict(&q), vec![1]);
        let p = m.predict_proba(&q);
        assert!((p.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        let m1 = KnnModel { k: 1, ..m };
        assert_eq!(m1.predict(&q), vec![0]);
    }

    #[test]
    fn tie_breaks_by_distance_then_index() {
        // Two neighbors, one per class: the nearer class wins.
        let m = model(2, &[[0.0, 0.0], [3.0, 0.0]], &[1, 0], 2);
        assert_eq!(m.predict(&Matrix::from_rows(&[[1.0, 0.0]])), vec![1]);
        assert_eq!(m.predict(&Matrix::from_rows(&[[2.5, 0.0]])), vec![0]);
        // Equidistant: the lower class index wins.
        assert_eq!(m.predict(&Matrix::from_rows(&[[1.5, 0.0]])), vec![0]);
    }

    #[test]
    fn distance_weighting_and_exact_match() {
        let mut m = model(3, &[[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]], &[0, 1, 1], 2);
        m.weights = Weighting::Distance;
        let p = m.predict_proba(&Matrix::from_rows(&[[0.0, 0.0], [0.5, 0.0]]));
        assert_eq!(p.row(0), &[1.0, 0.0]);
        let (w0, w1) = (1.0 / 0.5, 1.0 / 0.5 + 1.0 / 3.5);
        assert!((p.get(1, 0) - w0 / (w0 + w1)).abs() < 1e-15);
    }

    #[test]
    fn euclidean_vs_manhattan() {
        assert_eq!(Metric::Manhattan.distance(&[0.0, 0.0], &[3.0, 4.0]), 7.0);
        assert_eq!(Metric::Euclidean.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [1.8, 0.0]]);
        let q = [0.0, 0.0];
        assert_eq!(k_nearest(&x, &q, 2, Metric::Manhattan, Some(0))[0].1, 2);
        assert_eq!(k_nearest(&x, &q, 2, Metric::Euclidean, Some(0))[0].1, 1);
    }

    #[test]
    fn regression_mean_of_neighbors() {
        let m = KnnModel {
            k: 2,
            metric: Metric::Euclidean,
            weights: Weighting::Uniform,
            x: Matrix::from_rows(&[[0.0], [1.0], [10.0]]),
            y: KnnTarget::Values(vec![1.0, 3.0, 100.0]),
        };
        assert_eq!(m.predict_value(&Matrix::from_rows(&[[0.2]])), vec![2.0]);
    }

    #[test]
    fn k_nearest_matches_full_sort() {
        use crate::rng::rng_from_seed;
        use rand::Rng as _;
        let mut rng = rng_from_seed(11);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| (rng.random::<f64>() * 4.0).floor()).collect()).collect();
        let x = Matrix::from_rows(&rows);
        for k in [1, 5, 17, 60, 80] {
            let q = [1.0, 2.0, 0.0];
            let got = k_nearest(&x, &q, k, Metric::Manhattan, None);
            let mut all: Vec<(f64, usize)> = (0..60).map(|j| (Metric::Manhattan.distance(&q, x.row(j)), j)).collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.truncate(k);
            assert_eq!(got, all);
        }
    }
}
