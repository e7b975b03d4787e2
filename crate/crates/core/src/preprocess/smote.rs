use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::models::{k_nearest, Metric};
use crate::rng::{child_rng, Rng};
use crate::table::{ClassLabels, Matrix};

/// Where one synthetic row came from: `base + lambda * (neighbor - base)`,
/// indices into the input rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

/// Input rows first, in order, then the synthetic rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteResult {
    pub x: Matrix,
    pub y: ClassLabels,
    pub origins: Vec<SyntheticOrigin>,
}

impl SmoteResult {
    pub fn n_synthetic(&self) -> usize {
        self.origins.len()
    }
}

/// Draws `m` synthetic origins from `members`, each between a random member
/// and one of its `k` nearest (Euclidean) fellow members.
pub(crate) fn draw_origins(x: &Matrix, members: &[usize], m: usize, k: usize, rng: &mut Rng) -> Vec<SyntheticOrigin> {
    debug_assert!(members.len() >= 2 && k >= 1);
    let k_eff = k.min(members.len() - 1);
    let draws: Vec<(usize, usize, f64)> = (0..m)
        .map(|_| (rng.random_range(0..members.len()), rng.random_range(0..k_eff), rng.random::<f64>()))
        .collect();

    // Neighbor lists only for the bases actually drawn.
    let mut needed: Vec<usize> = draws.iter().map(|d| d.0).collect();
    needed.sort_unstable();
    needed.dedup();
    let sub = x.select_rows(members);
    let lists: Vec<(usize, Vec<usize>)> = needed
        .par_iter()
        .map(|&b| {
            let nn = k_nearest(&sub, sub.row(b), k_eff, Metric::Euclidean, Some(b));
            (b, nn.into_iter().map(|(_, j)| j).collect())
        })
        .collect();
    let mut by_base: Vec<Option<&Vec<usize>>> = vec![None; members.len()];
    for (b, l) in &lists {
        by_base[*b] = Some(l);
    }
    draws
        .into_iter()
        .map(|(b, r, lambda)| SyntheticOrigin {
            base: members[b],
            neighbor: members[by_base[b].expect("computed above")[r]],
            lambda,
        })
        .collect()
}

pub(crate) fn interpolate(x: &Matrix, o: &SyntheticOrigin) -> Vec<f64> {
    x.row(o.base).iter().zip(x.row(o.neighbor)).map(|(a, b)| a + o.lambda * (b - a)).collect()
}

/// Oversamples every class below its target count. The default target is
/// the majority count for every class. Classes absent from `y` are left
/// alone; a class that needs rows but has fewer than 2 is an error.
pub fn smote_oversample(
    x: &Matrix,
    y: &ClassLabels,
    k_neighbors: usize,
    target: Option<&[usize]>,
    seed: u64,
) -> Result<SmoteResult, PreprocessError> {
    if k_neighbors == 0 {
        return Err(PreprocessError::BadParameter("k_neighbors must be at least 1".into()));
    }
    let counts = y.counts();
    let targets: Vec<usize> = match target {
        Some(t) if t.len() != counts.len() => {
            return Err(PreprocessError::BadParameter(format!("{} targets for {} classes", t.len(), counts.len())));
        }
        Some(t) => t.to_vec(),
        None => vec![counts.iter().copied().max().unwrap_or(0); counts.len()],
    };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
    for (i, &l) in y.labels.iter().enumerate() {
        members[l].push(i);
    }
    for c in 0..counts.len() {
        if counts[c] > 0 && counts[c] < targets[c] && counts[c] < 2 {
            return Err(PreprocessError::TooFewSamples { class: y.roster[c].clone(), count: counts[c] });
        }
    }
    let per_class: Vec<Vec<SyntheticOrigin>> = (0..counts.len())
        .into_par_iter()
        .map(|c| {
            if counts[c] == 0 || counts[c] >= targets[c] {
                return Vec::new();
            }
            let mut rng = child_rng(seed, c as u64);
            draw_origins(x, &members[c], targets[c] - counts[c], k_neighbors, &mut rng)
        })
        .collect();

    let mut out = x.clone();
    let mut labels = y.labels.clone();
    let mut origins = Vec::new();
    for (c, os) in per_class.into_iter().enumerate() {
        for o in os {
            out.push_row(&interpolate(x, &o));
            labels.push(c);
            origins.push(o);
        }
    }
    Ok(SmoteResult { x: out, y: ClassLabels::new(y.roster.clone(), labels), origins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn roster(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = ClassLabels::new(roster(2), vec![0, 1, 0, 1]);
        let r = smote_oversample(&x, &y, 5, None, 1).unwrap();
        assert_eq!(r.x, x);
        assert_eq!(r.y, y);
    }

    #[test]
    fn two_point_minority_lands_on_segment() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 0.0], [5.0, 1.0], [6.0, 0.0]]);
        let y = ClassLabels::new(roster(2), vec![0, 0, 1, 1, 1]);
        let r = smote_oversample(&x, &y, 1, None, 7).unwrap();
        assert_eq!(r.x.n_rows(), 6);
        let p = r.x.row(5);
        assert_eq!(p[0], p[1]);
        assert!((0.0..=1.0).contains(&p[0]));
        assert_eq!(r.y.labels[5], 0);
    }

    #[test]
    fn table_two_counts_reach_majority() {
        let counts = [539usize, 10057, 9208, 2571, 642, 260];
        let mut rng = rng_from_seed(3);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                rows.push([c as f64 + rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]);
                labels.push(c);
            }
        }
        let x = Matrix::from_rows(&rows);
        let y = ClassLabels::new(roster(6), labels);
        let r = smote_oversample(&x, &y, 5, None, 11).unwrap();
        assert_eq!(r.y.counts(), vec![10057; 6]);
        // Originals preserved in place.
        assert_eq!(r.x.select_rows(&(0..x.n_rows()).collect::<Vec<_>>()), x);
    }

    #[test]
    fn too_few_samples() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let y = ClassLabels::new(roster(2), vec![0, 0, 1]);
        assert_eq!(
            smote_oversample(&x, &y, 5, None, 1),
            Err(PreprocessError::TooFewSamples { class: "c1".into(), count: 1 })
        );
    }

    #[test]
    fn neighbors_are_among_k_nearest() {
        // Oracle: brute-force Euclidean ranks within the class.
        let mut rng = rng_from_seed(8);
        let rows: Vec<[f64; 2]> = (0..40).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 10)).collect();
        let x = Matrix::from_rows(&rows);
        let y = ClassLabels::new(roster(2), labels);
        let r = smote_oversample(&x, &y, 3, None, 2).unwrap();
        for o in &r.origins {
            let b = rows[o.base];
            let d = |i: usize| ((rows[i][0] - b[0]).powi(2) + (rows[i][1] - b[1]).powi(2)).sqrt();
            let mut others: Vec<usize> = (0..10).filter(|&i| i != o.base).collect();
            others.sort_by(|&i, &j| d(i).total_cmp(&d(j)));
            assert!(others[..3].contains(&o.neighbor));
        }
    }

    proptest! {
        #[test]
        fn synthetic_rows_lie_between_parents(seed in 0u64..1000, n0 in 2usize..8, n1 in 8usize..20) {
            let mut rng = rng_from_seed(seed);
            let n = n0 + n1;
            let rows: Vec<[f64; 3]> = (0..n).map(|_| [rng.random::<f64>() * 10.0 - 5.0, rng.random::<f64>(), rng.random::<f64>() * 100.0]).collect();
            let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n0)).collect();
            let x = Matrix::from_rows(&rows);
            let y = ClassLabels::new(roster(2), labels);
            let r = smote_oversample(&x, &y, 5, None, seed).unwrap();
            prop_assert_eq!(r.y.counts(), vec![n1, n1]);
            for (s, o) in r.origins.iter().enumerate() {
                prop_assert_eq!(y.labels[o.base], y.labels[o.neighbor]);
                let row = r.x.row(n + s);
                for j in 0..3 {
                    let (a, b) = (rows[o.base][j], rows[o.neighbor][j]);
                    prop_assert!(row[j] >= a.min(b) - 1e-12 && row[j] <= a.max(b) + 1e-12);
                }
            }
        }
    }
}
