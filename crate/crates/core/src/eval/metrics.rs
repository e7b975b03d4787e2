use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::table::Matrix;

/// Rows are true labels, columns predictions, both in roster order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub roster: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Each row sums to 1: recall on the diagonal.
    Row,
    /// Each column sums to 1: precision on the diagonal.
    Column,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], roster: &[String]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::BadInput(format!("{} labels vs {} predictions", y_true.len(), y_pred.len())));
    }
    let c = roster.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= c || p >= c {
            return Err(EvalError::UnknownLabel(format!("class index {} outside a roster of {c}", t.max(p))));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { roster: roster.to_vec(), counts })
}

/// Same as [`confusion_matrix`] for string labels.
pub fn confusion_from_strings<S: AsRef<str>>(y_true: &[S], y_pred: &[S], roster: &[String]) -> Result<ConfusionMatrix, EvalError> {
    let idx = |v: &[S]| -> Result<Vec<usize>, EvalError> {
        v.iter()
            .map(|s| roster.iter().position(|r| r == s.as_ref()).ok_or_else(|| EvalError::UnknownLabel(s.as_ref().to_string())))
            .collect()
    };
    confusion_matrix(&idx(y_true)?, &idx(y_pred)?, roster)
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.roster.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn tp(&self, i: usize) -> u64 {
        self.counts[i][i]
    }

    /// Samples of class `i`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Samples predicted as class `i`.
    pub fn predicted(&self, i: usize) -> u64 {
        self.counts.iter().map(|r| r[i]).sum()
    }

    pub fn fp(&self, i: usize) -> u64 {
        self.predicted(i) - self.tp(i)
    }

    pub fn fn_(&self, i: usize) -> u64 {
        self.support(i) - self.tp(i)
    }

    pub fn tn(&self, i: usize) -> u64 {
        self.total() - self.support(i) - self.predicted(i) + self.tp(i)
    }

    /// Empty rows (or columns) stay all zero.
    pub fn normalize(&self, axis: Axis) -> Vec<Vec<f64>> {
        let c = self.n_classes();
        let mut out = vec![vec![0.0; c]; c];
        for i in 0..c {
            for j in 0..c {
                let denom = match axis {
                    Axis::Row => self.support(i),
                    Axis::Column => self.predicted(j),
                };
                if denom > 0 {
                    out[i][j] = self.counts[i][j] as f64 / denom as f64;
                }
            }
        }
        out
    }

    /// Element-wise sum; rosters must match.
    pub fn merge(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix, EvalError> {
        if self.roster != other.roster {
            return Err(EvalError::BadInput("confusion rosters differ".into()));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Ok(ConfusionMatrix { roster: self.roster.clone(), counts })
    }

    /// `true\pred` header row, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for r in &self.roster {
            s.push(',');
            s.push_str(r);
        }
        s.push('\n');
        for (r, row) in self.roster.iter().zip(&self.counts) {
            s.push_str(r);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision_macro: f64,
    /// Harmonic mean of macro precision and macro recall.
    pub f1_macro: f64,
    /// Mean of per-class F1, for comparison only.
    pub f1_macro_per_class: f64,
    pub roc_auc_macro: Option<f64>,
    /// `None` for classes absent from the truth.
    pub per_class_recall: Vec<Option<f64>>,
    /// `None` for classes neither present nor predicted.
    pub per_class_precision: Vec<Option<f64>>,
}

pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Accuracy is the diagonal share. Balanced accuracy averages recall over
/// classes present in the truth. Macro precision averages over classes that
/// are present or predicted; a present class that is never predicted counts
/// as precision 0.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let c = cm.n_classes();
    let trace: u64 = (0..c).map(|i| cm.tp(i)).sum();
    let mut recall = vec![None; c];
    let mut precision = vec![None; c];
    for i in 0..c {
        let (sup, pred) = (cm.support(i), cm.predicted(i));
        if sup > 0 {
            recall[i] = Some(cm.tp(i) as f64 / sup as f64);
        }
        if pred > 0 {
            precision[i] = Some(cm.tp(i) as f64 / pred as f64);
        } else if sup > 0 {
            log::debug!("class {} is never predicted; precision counts as 0", cm.roster[i]);
            precision[i] = Some(0.0);
        }
    }
    let mean = |v: &[Option<f64>]| {
        let xs: Vec<f64> = v.iter().flatten().copied().collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let balanced_accuracy = mean(&recall);
    let precision_macro = mean(&precision);
    let per_class_f1: Vec<Option<f64>> =
        (0..c).map(|i| recall[i].map(|r| f1_from(precision[i].unwrap_or(0.0), r))).collect();
    Ok(MetricsReport {
        accuracy: trace as f64 / n as f64,
        balanced_accuracy,
        precision_macro,
        f1_macro: f1_from(precision_macro, balanced_accuracy),
        f1_macro_per_class: mean(&per_class_f1),
        roc_auc_macro: None,
        per_class_recall: recall,
        per_class_precision: precision,
    })
}

/// Ranks starting at 1; tied values share their average rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Mann–Whitney AUC of `scores` for `positive` against the rest.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let r_pos: f64 = ranks.iter().zip(positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Some((r_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// One-vs-rest AUC per class present in `y_true`, macro-averaged.
pub fn roc_auc_macro(y_true: &[usize], proba: &Matrix) -> Result<f64, EvalError> {
    if proba.n_rows() != y_true.len() {
        return Err(EvalError::BadInput("probability rows do not match labels".into()));
    }
    let present: Vec<usize> = (0..proba.n_cols()).filter(|c| y_true.contains(c)).collect();
    if present.len() < 2 {
        return Err(EvalError::SingleClassTruth);
    }
    let aucs: Vec<f64> = present
        .iter()
        .map(|&c| {
            let pos: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
            binary_auc(&proba.column(c), &pos).expect("class present and not alone")
        })
        .collect();
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

/// Confusion matrix and metrics; ROC-AUC when probabilities are given and
/// the truth holds at least two classes.
pub fn evaluate_classification(
    y_true: &[usize],
    y_pred: &[usize],
    proba: Option<&Matrix>,
    roster: &[String],
) -> Result<(MetricsReport, ConfusionMatrix), EvalError> {
    let cm = confusion_matrix(y_true, y_pred, roster)?;
    let mut m = classification_metrics(&cm)?;
    if let Some(p) = proba {
        m.roc_auc_macro = match roc_auc_macro(y_true, p) {
            Ok(a) => Some(a),
            Err(EvalError::SingleClassTruth) => None,
            Err(e) => return Err(e),
        };
    }
    Ok((m, cm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn roster(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn diagonal_is_perfect() {
        let y = [0, 1, 2, 2, 1];
        let (m, cm) = evaluate_classification(&y, &y, None, &roster(3)).unwrap();
        assert_eq!((m.accuracy, m.balanced_accuracy, m.precision_macro, m.f1_macro), (1.0, 1.0, 1.0, 1.0));
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(cm.normalize(Axis::Row), eye);
        assert_eq!(cm.normalize(Axis::Column), eye);
    }

    #[test]
    fn regular_zone_row_a() {
        let mut cm = ConfusionMatrix { roster: roster(6), counts: vec![vec![0; 6]; 6] };
        cm.counts[0] = vec![75, 4, 0, 0, 0, 0];
        let r = cm.normalize(Axis::Row);
        assert!((r[0][0] - 0.95).abs() < 0.005 && (r[0][1] - 0.05).abs() < 0.005);
    }

    #[test]
    fn tp_tn_fp_fn_add_up() {
        let cm = confusion_matrix(&[0, 0, 1, 2, 2, 2], &[0, 1, 1, 2, 0, 2], &roster(3)).unwrap();
        for i in 0..3 {
            assert_eq!(cm.tp(i) + cm.tn(i) + cm.fp(i) + cm.fn_(i), 6);
        }
        assert_eq!((cm.tp(0), cm.fp(0), cm.fn_(0), cm.tn(0)), (1, 1, 1, 3));
        assert!(confusion_matrix(&[3], &[0], &roster(3)).is_err());
        assert!(matches!(classification_metrics(&confusion_matrix(&[], &[], &roster(2)).unwrap()), Err(EvalError::EmptyMatrix)));
    }

    #[test]
    fn transpose_symmetry() {
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let c = rng.random_range(2..6);
            let counts: Vec<Vec<u64>> = (0..c).map(|_| (0..c).map(|_| rng.random_range(0..5)).collect()).collect();
            let cm = ConfusionMatrix { roster: roster(c), counts: counts.clone() };
            let t = ConfusionMatrix { roster: roster(c), counts: (0..c).map(|j| (0..c).map(|i| counts[i][j]).collect()).collect() };
            let col = cm.normalize(Axis::Column);
            let via_t = t.normalize(Axis::Row);
            for i in 0..c {
                for j in 0..c {
                    assert_eq!(col[i][j], via_t[j][i]);
                }
            }
        }
    }

    #[test]
    fn roc_hand_cases() {
        let y = [1, 1, 0, 0];
        let sep = Matrix::from_rows(&[[0.1, 0.9], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]]);
        assert_eq!(roc_auc_macro(&y, &sep).unwrap(), 1.0);
        // Positives .9/.4 against negatives .8/.7: two of four pairs ordered.
        let swapped = Matrix::from_rows(&[[0.1, 0.9], [0.6, 0.4], [0.2, 0.8], [0.3, 0.7]]);
        let brute = {
            let (pos, neg) = ([0.9, 0.4], [0.8, 0.7]);
            let mut s = 0.0;
            for p in pos {
                for q in neg {
                    s += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
                }
            }
            s / 4.0
        };
        assert_eq!(brute, 0.5);
        assert_eq!(roc_auc_macro(&y, &swapped).unwrap(), brute);
        let flat = Matrix::from_rows(&[[0.5, 0.5]; 4]);
        assert_eq!(roc_auc_macro(&y, &flat).unwrap(), 0.5);
        assert_eq!(roc_auc_macro(&[0, 0], &Matrix::from_rows(&[[1.0, 0.0]; 2])), Err(EvalError::SingleClassTruth));
    }

    #[test]
    fn eq4_combination() {
        assert!((f1_from(0.78, 0.86) - 0.818).abs() < 0.0005);
    }

    fn brute_auc(scores: &[f64], pos: &[bool]) -> f64 {
        let mut s = 0.0;
        let mut n = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if pos[i] && !pos[j] {
                    n += 1.0;
                    s += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        s / n
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count_and_is_rank_invariant(v in proptest::collection::vec((0u8..6, any::<bool>()), 2..60)) {
            let scores: Vec<f64> = v.iter().map(|(s, _)| *s as f64 / 5.0).collect();
            let pos: Vec<bool> = v.iter().map(|(_, p)| *p).collect();
            if let Some(a) = binary_auc(&scores, &pos) {
                prop_assert!((a - brute_auc(&scores, &pos)).abs() < 1e-12);
                let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
                prop_assert_eq!(binary_auc(&warped, &pos).unwrap(), a);
            }
        }

        #[test]
        fn balanced_accuracy_is_row_normalized_diagonal(v in proptest::collection::vec((0usize..4, 0usize..4), 1..80)) {
            let (t, p): (Vec<usize>, Vec<usize>) = v.into_iter().unzip();
            let (m, cm) = evaluate_classification(&t, &p, None, &roster(4)).unwrap();
            let rn = cm.normalize(Axis::Row);
            let present: Vec<usize> = (0..4).filter(|c| cm.support(*c) > 0).collect();
            let d = present.iter().map(|&c| rn[c][c]).sum::<f64>() / present.len() as f64;
            prop_assert!((d - m.balanced_accuracy).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&m.precision_macro));
        }
    }
}
