use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{canonical_names, FeatureError, GEOMETRY_NAMES, STAT_NAMES};
use crate::dataset::PARAM_NAMES;
use crate::table::Features;

/// Source-system names that denote canonical slots.
pub const COLUMN_ALIASES: [(&str, &str); 2] = [("ContourWidth", "TunnelWidth"), ("TerrainHeight", "Overburden")];

/// The fixed 21-feature automated selection, in its published order and naming.
pub const AUTOMATED_21: [&str; 21] = [
    "ContourWidth",
    "TerrainHeight",
    "JnMult",
    "FeedPressNormMedian",
    "FeedPressNormVariance",
    "HammerPressNormMedian",
    "HammerPressNormKurtosis",
    "PenetrNormMedian",
    "PenetrNormStandardDeviation",
    "PenetrRMSMean",
    "PenetrRMSKurtosis",
    "PenetrRMSVariance",
    "RotaPressNormMedian",
    "RotaPressRMSMean",
    "RotaPressNormStandardDeviation",
    "RotaPressRMSKurtosis",
    "RotaPressRMSVariance",
    "WaterFlowNormMedian",
    "WaterFlowNormSkewness",
    "WaterFlowRMSKurtosis",
    "WaterFlowRMSStandardDeviation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSetKind {
    All51,
    Domain35,
    Automated21,
    Dependent39,
    MwdOnly48,
    MwdMedian8,
}

impl FeatureSetKind {
    pub const ALL: [FeatureSetKind; 6] = [
        FeatureSetKind::All51,
        FeatureSetKind::Domain35,
        FeatureSetKind::Automated21,
        FeatureSetKind::Dependent39,
        FeatureSetKind::MwdOnly48,
        FeatureSetKind::MwdMedian8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetKind::All51 => "all51",
            FeatureSetKind::Domain35 => "domain35",
            FeatureSetKind::Automated21 => "automated21",
            FeatureSetKind::Dependent39 => "dependent39",
            FeatureSetKind::MwdOnly48 => "mwd_only48",
            FeatureSetKind::MwdMedian8 => "mwd_median8",
        }
    }

    /// Canonical names kept by this set, in output order.
    pub fn names(self) -> Vec<String> {
        let all = canonical_names();
        let stat_of = |n: &str| STAT_NAMES.iter().position(|s| n.ends_with(s) && PARAM_NAMES.iter().any(|p| n == format!("{p}{s}")));
        let param_of = |n: &str| PARAM_NAMES.iter().position(|p| n.starts_with(p) && STAT_NAMES.iter().any(|s| n == format!("{p}{s}")));
        let is_geometry = |n: &str| GEOMETRY_NAMES.contains(&n);
        match self {
            FeatureSetKind::All51 => all,
            FeatureSetKind::Domain35 => all
                .into_iter()
                .filter(|n| !matches!(stat_of(n), Some(0) | Some(2)))
                .collect(),
            FeatureSetKind::Automated21 => AUTOMATED_21.iter().map(|n| canonical_alias(n).to_string()).collect(),
            FeatureSetKind::Dependent39 => all
                .into_iter()
                .filter(|n| !matches!(param_of(n).map(|p| PARAM_NAMES[p]), Some("FeedPressNorm") | Some("HammerPressNorm")))
                .collect(),
            FeatureSetKind::MwdOnly48 => all.into_iter().filter(|n| !is_geometry(n)).collect(),
            FeatureSetKind::MwdMedian8 => all.into_iter().filter(|n| stat_of(n) == Some(1)).collect(),
        }
    }
}

impl fmt::Display for FeatureSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSetKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        FeatureSetKind::ALL
            .into_iter()
            .find(|k| k.as_str().replace('_', "") == key)
            .ok_or_else(|| FeatureError::UnknownKind(s.to_string()))
    }
}

/// Maps a source-system alias to its canonical name; other names pass through.
pub fn canonical_alias(name: &str) -> &str {
    COLUMN_ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, c)| c)
}

/// Reduces a canonical feature table to the columns of `kind`.
pub fn select_features(features: &Features, kind: FeatureSetKind) -> Result<Features, FeatureError> {
    features.select_names(&kind.names()).map_err(FeatureError::UnknownFeature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Matrix;

    #[test]
    fn widths_match_published_counts() {
        let widths: Vec<usize> = FeatureSetKind::ALL.iter().map(|k| k.names().len()).collect();
        assert_eq!(widths, vec![51, 35, 21, 39, 48, 8]);
    }

    #[test]
    fn subsets_are_canonical_and_distinct() {
        let all = canonical_names();
        for k in FeatureSetKind::ALL {
            let names = k.names();
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), names.len(), "{k}");
            assert!(names.iter().all(|n| all.contains(n)), "{k}");
        }
    }

    #[test]
    fn specific_contents() {
        let med = FeatureSetKind::MwdMedian8.names();
        assert!(med.iter().all(|n| n.ends_with("Median")));
        let dep = FeatureSetKind::Dependent39.names();
        assert!(!dep.iter().any(|n| n.starts_with("FeedPress") || n.starts_with("HammerPress")));
        let dom = FeatureSetKind::Domain35.names();
        assert!(!dom.iter().any(|n| n.ends_with("Mean") || n.ends_with("StandardDeviation")));
        assert!(dom.contains(&"Overburden".to_string()));
        let auto = FeatureSetKind::Automated21.names();
        assert_eq!(&auto[..3], &["TunnelWidth", "Overburden", "JnMult"]);
        assert_eq!(canonical_alias("PenetrRMSMean"), "PenetrRMSMean");
    }

    #[test]
    fn select_on_table() {
        let names = canonical_names();
        let row: Vec<f64> = (0..51).map(|i| i as f64).collect();
        let f = Features::new(names.clone(), Matrix::from_rows(&[row]));
        assert_eq!(select_features(&f, FeatureSetKind::All51).unwrap(), f);
        let m = select_features(&f, FeatureSetKind::MwdMedian8).unwrap();
        assert_eq!(m.matrix.row(0), &[1.0, 7.0, 13.0, 19.0, 25.0, 31.0, 37.0, 43.0]);
        let small = f.select_names(&names[..10].to_vec()).unwrap();
        assert!(matches!(select_features(&small, FeatureSetKind::All51), Err(FeatureError::UnknownFeature(_))));
    }

    #[test]
    fn parse_kinds() {
        for k in FeatureSetKind::ALL {
            assert_eq!(k.as_str().parse::<FeatureSetKind>().unwrap(), k);
        }
        assert_eq!("MwdMedian8".parse::<FeatureSetKind>().unwrap(), FeatureSetKind::MwdMedian8);
        assert!("all50".parse::<FeatureSetKind>().is_err());
    }
}
