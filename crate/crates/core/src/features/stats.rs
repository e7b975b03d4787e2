use super::{FeatureError, N_FEATURES};
use crate::dataset::N_PARAMS;

/// Six summary statistics of one parameter within one section.
///
/// Variance and standard deviation use the n−1 denominator (0 for a single
/// value). Skewness is the Fisher–Pearson g1 = m3 / m2^1.5 and kurtosis the
/// excess m4 / m2² − 3, both from population central moments; both are 0
/// when the values have no spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl Summary {
    pub fn as_array(&self) -> [f64; 6] {
        [self.mean, self.median, self.std_dev, self.variance, self.skewness, self.kurtosis]
    }
}

pub fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_of_sorted(&v)
}

/// Returns `None` for an empty slice.
pub fn summary(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    // Sorting first makes every accumulation order-independent, so the
    // statistics are exactly permutation invariant.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in &sorted {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = if sorted.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let (m2p, m3p, m4p) = (m2 / n, m3 / n, m4 / n);
    // Relative guard so rounding noise on constant input does not produce
    // spurious moments.
    let spread = m2p.sqrt();
    let zero_spread = spread <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) || m2p == 0.0;
    let (skewness, kurtosis) = if zero_spread {
        (0.0, 0.0)
    } else {
        (m3p / m2p.powf(1.5), m4p / (m2p * m2p) - 3.0)
    };
    Some(Summary {
        mean,
        median: median_of_sorted(&sorted),
        std_dev: variance.sqrt(),
        variance,
        skewness,
        kurtosis,
    })
}

/// Builds the 51-slot vector from per-parameter value lists and the
/// `(overburden_m, tunnel_width_m, jn_mult)` geometry, copied verbatim.
pub fn aggregate_section(values: &[Vec<f64>; N_PARAMS], geometry: (f64, f64, f64)) -> Result<Vec<f64>, FeatureError> {
    let mut out = Vec::with_capacity(N_FEATURES);
    for (p, vals) in values.iter().enumerate() {
        let s = summary(vals).ok_or(FeatureError::EmptyInput(p))?;
        out.extend(s.as_array());
    }
    out.extend([geometry.0, geometry.1, geometry.2]);
    Ok(out)
}

/// Sliding root-mean-square of the deviation from the window mean.
///
/// The window for index `i` nominally covers `[i - (w-1)/2, i + w/2]`; near
/// the signal edges it is slid inward so every window holds exactly `w`
/// values. The output has the input's length.
pub fn rms_filter(signal: &[f64], window: usize) -> Result<Vec<f64>, FeatureError> {
    if window == 0 || window > signal.len() {
        return Err(FeatureError::WindowTooLarge { window, len: signal.len() });
    }
    let back = (window - 1) / 2;
    let last_start = signal.len() - window;
    Ok((0..signal.len())
        .map(|i| {
            let lo = i.saturating_sub(back).min(last_start);
            let w = &signal[lo..lo + window];
            let m = w.iter().sum::<f64>() / window as f64;
            (w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / window as f64).sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook moments computed directly from the definitions.
    fn oracle(values: &[f64]) -> [f64; 6] {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if s.len() % 2 == 1 { s[s.len() / 2] } else { (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0 };
        let cm = |k: i32| values.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m2 = cm(2);
        [mean, med, var.sqrt(), var, cm(3) / m2.powf(1.5), cm(4) / (m2 * m2) - 3.0]
    }

    #[test]
    fn one_to_four() {
        let s = summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.variance - 1.666_666_666_666_666_7).abs() < 1e-12);
        assert!((s.std_dev - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(s.skewness, 0.0);
        let o = oracle(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.kurtosis - o[5]).abs() < 1e-12);
        assert!((s.kurtosis - (-1.36)).abs() < 1e-12);
    }

    #[test]
    fn constant_values() {
        let s = summary(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.as_array(), [5.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
        let s = summary(&[0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        assert_eq!((s.skewness, s.kurtosis), (0.0, 0.0));
    }

    #[test]
    fn skewed_values() {
        let v = [1.0, 2.0, 2.0, 3.0, 100.0];
        let s = summary(&v).unwrap();
        assert_eq!(s.median, 2.0);
        assert!((s.mean - 21.6).abs() < 1e-12);
        for (a, b) in s.as_array().iter().zip(oracle(&v)) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn single_value() {
        let s = summary(&[3.0]).unwrap();
        assert_eq!(s.as_array(), [3.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(summary(&[]).is_none());
    }

    #[test]
    fn aggregate_layout_and_errors() {
        let mut vals: [Vec<f64>; N_PARAMS] = Default::default();
        for (p, v) in vals.iter_mut().enumerate() {
            *v = vec![p as f64, p as f64 + 2.0];
        }
        let f = aggregate_section(&vals, (30.0, 10.5, 1.0)).unwrap();
        assert_eq!(f.len(), N_FEATURES);
        assert_eq!(f[super::super::slot(3, 0)], 4.0);
        assert_eq!(&f[48..], &[30.0, 10.5, 1.0]);
        vals[2].clear();
        assert_eq!(aggregate_section(&vals, (0.0, 1.0, 1.0)), Err(FeatureError::EmptyInput(2)));
    }

    #[test]
    fn rms_examples() {
        assert!(rms_filter(&[3.0; 10], 4).unwrap().iter().all(|v| *v == 0.0));
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let out = rms_filter(&alt, 2).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|v| (*v - 1.0).abs() < 1e-12), "{out:?}");
        let mut spike = vec![0.0; 11];
        spike[5] = 4.0;
        let out = rms_filter(&spike, 3).unwrap();
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v != 0.0, (4..=6).contains(&i), "index {i}");
        }
        assert_eq!(rms_filter(&[1.0, 2.0], 3), Err(FeatureError::WindowTooLarge { window: 3, len: 2 }));
    }

    proptest! {
        #[test]
        fn summary_matches_oracle(v in proptest::collection::vec(-50.0..50.0f64, 3..40)) {
            let s = summary(&v).unwrap();
            let o = oracle(&v);
            let spread = o[3];
            prop_assume!(spread > 1e-6);
            for (a, b) in s.as_array().iter().zip(o) {
                prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{} vs {}", a, b);
            }
            prop_assert!((s.variance - s.std_dev * s.std_dev).abs() <= 1e-9 * s.variance.max(1e-300));
        }

        #[test]
        fn summary_is_permutation_invariant(v in proptest::collection::vec(-50.0..50.0f64, 2..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut w = v.clone();
            w.shuffle(&mut crate::rng::rng_from_seed(seed));
            prop_assert_eq!(summary(&v), summary(&w));
        }

        #[test]
        fn scaling_transforms_moments(v in proptest::collection::vec(-50.0..50.0f64, 3..40), c in 0.01..100.0f64) {
            let s = summary(&v).unwrap();
            prop_assume!(s.variance > 1e-3);
            let w: Vec<f64> = v.iter().map(|x| x * c).collect();
            let t = summary(&w).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * b.abs().max(1.0);
            prop_assert!(close(t.mean, c * s.mean));
            prop_assert!(close(t.median, c * s.median));
            prop_assert!(close(t.std_dev, c * s.std_dev));
            prop_assert!(close(t.variance, c * c * s.variance));
            prop_assert!(close(t.skewness, s.skewness));
            prop_assert!(close(t.kurtosis, s.kurtosis));
        }
    }
}
