use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::child_rng;
use crate::table::{ClassLabels, Target};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_fraction(f: f64) -> Result<(), EvalError> {
    if !(0.0..1.0).contains(&f) {
        return Err(EvalError::BadInput(format!("test fraction {f} must lie in [0, 1)")));
    }
    Ok(())
}

/// `ceil(fraction * n)`, forgiving float noise just above an integer.
fn test_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Largest-remainder allocation of `total` over groups proportional to `sizes`;
/// equal remainders favor the lower group index.
fn allocate(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let ideal: Vec<f64> = sizes.iter().map(|&s| s as f64 * total as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
    let mut left = total - alloc.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if alloc[g] < sizes[g] {
            alloc[g] += 1;
            left -= 1;
        }
    }
    alloc
}

fn members(y: &ClassLabels) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); y.n_classes()];
    for (i, &l) in y.labels.iter().enumerate() {
        m[l].push(i);
    }
    m
}

/// Test set of `ceil(test_fraction * n)` rows, split over classes by largest
/// remainder; each class is shuffled with its own stream.
pub fn stratified_split(y: &ClassLabels, test_fraction: f64, seed: u64) -> Result<Split, EvalError> {
    check_fraction(test_fraction)?;
    let groups = members(y);
    if test_fraction > 0.0 {
        for (c, g) in groups.iter().enumerate() {
            if !g.is_empty() && g.len() < 2 {
                return Err(EvalError::ClassTooSmall { class: y.roster[c].clone(), count: g.len(), need: 2 });
            }
        }
    }
    let n = y.labels.len();
    let alloc = allocate(&groups.iter().map(Vec::len).collect::<Vec<_>>(), test_size(test_fraction, n));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut g) in groups.into_iter().enumerate() {
        g.shuffle(&mut child_rng(seed, c as u64));
        test.extend_from_slice(&g[..alloc[c]]);
        train.extend_from_slice(&g[alloc[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn random_split(n: usize, test_fraction: f64, seed: u64) -> Result<Split, EvalError> {
    check_fraction(test_fraction)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut child_rng(seed, 0));
    let k = test_size(test_fraction, n);
    let mut test = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Stratified for class targets, plain random for continuous ones.
pub fn split_target(y: &Target, test_fraction: f64, seed: u64) -> Result<Split, EvalError> {
    match y {
        Target::Classes(c) => stratified_split(c, test_fraction, seed),
        Target::Values(v) => random_split(v.len(), test_fraction, seed),
    }
}

/// Held-out index sets of `k` stratified folds. Each class is shuffled, then
/// dealt round-robin starting where the previous class stopped, so per-class
/// and total fold sizes each stay within one of the ideal.
pub fn kfold(y: &ClassLabels, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::BadInput(format!("k = {k}; need at least 2 folds")));
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (c, mut g) in members(y).into_iter().enumerate() {
        if g.is_empty() {
            continue;
        }
        if g.len() < k {
            return Err(EvalError::ClassTooSmall { class: y.roster[c].clone(), count: g.len(), need: k });
        }
        g.shuffle(&mut child_rng(seed, c as u64));
        for (j, i) in g.iter().enumerate() {
            folds[(offset + j) % k].push(*i);
        }
        offset = (offset + g.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn kfold_plain(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::BadInput(format!("cannot cut {n} rows into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut child_rng(seed, 0));
    let mut folds = vec![Vec::new(); k];
    for (j, i) in idx.into_iter().enumerate() {
        folds[j % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn kfold_target(y: &Target, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    match y {
        Target::Classes(c) => kfold(c, k, seed),
        Target::Values(v) => kfold_plain(v.len(), k, seed),
    }
}

/// Complement of `test` in `0..n`.
pub fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; n];
    for &i in test {
        mark[i] = true;
    }
    (0..n).filter(|&i| !mark[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(counts: &[usize]) -> ClassLabels {
        let roster = (0..counts.len()).map(|i| format!("c{i}")).collect();
        let l = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        ClassLabels::new(roster, l)
    }

    #[test]
    fn table_three_sizes() {
        let y = labels(&[539, 10057, 9208, 2571, 642, 260]);
        let s = stratified_split(&y, 0.25, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (17457, 5820));
        let counts = y.counts();
        for c in 0..6 {
            let t = s.test.iter().filter(|&&i| y.labels[i] == c).count() as f64;
            assert!((t - 0.25 * counts[c] as f64).abs() <= 1.0);
        }
    }

    #[test]
    fn exact_quarter_and_zero_fraction() {
        let y = labels(&[100; 6]);
        let s = stratified_split(&y, 0.25, 3).unwrap();
        for c in 0..6 {
            assert_eq!(s.test.iter().filter(|&&i| y.labels[i] == c).count(), 25);
        }
        let all = stratified_split(&y, 0.0, 3).unwrap();
        assert_eq!((all.train.len(), all.test.len()), (600, 0));
        assert!(matches!(stratified_split(&labels(&[5, 1]), 0.25, 1), Err(EvalError::ClassTooSmall { .. })));
    }

    #[test]
    fn folds_need_k_members() {
        assert!(matches!(kfold(&labels(&[10, 4]), 5, 1), Err(EvalError::ClassTooSmall { count: 4, need: 5, .. })));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(counts in proptest::collection::vec(5usize..40, 2..6), k in 2usize..6, seed in 0u64..100) {
            let y = labels(&counts);
            let folds = kfold(&y, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.labels.len()).collect::<Vec<_>>());
            let n = y.labels.len() as f64;
            for f in &folds {
                prop_assert!((f.len() as f64 - n / k as f64).abs() < 1.0 + 1e-9);
                for (c, &cnt) in counts.iter().enumerate() {
                    let in_f = f.iter().filter(|&&i| y.labels[i] == c).count() as f64;
                    prop_assert!((in_f - cnt as f64 / k as f64).abs() < 1.0 + 1e-9);
                }
            }
            prop_assert_eq!(kfold(&y, k, seed).unwrap(), folds);
        }

        #[test]
        fn split_is_disjoint_and_exhaustive(counts in proptest::collection::vec(2usize..50, 1..6), frac in 0.0f64..0.9, seed in 0u64..50) {
            let y = labels(&counts);
            let s = stratified_split(&y, frac, seed).unwrap();
            let n = y.labels.len();
            prop_assert_eq!(s.test.len(), test_size(frac, n));
            prop_assert_eq!(complement(n, &s.test), s.train.clone());
        }
    }
}
