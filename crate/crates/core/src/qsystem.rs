//! Q-system arithmetic, Q-classes, label groupings and transition-zone tags.
//!
//! Q = (RQD/Jn)·(Jr/Ja)·(Jw/SRF). Q-base drops the last quotient. Class bands
//! are lower-inclusive: E2 [0.01, 0.4), E1 [0.4, 1), D [1, 4), C [4, 10),
//! B [10, 40), A [40, ∞).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QError {
    #[error("Q component {0} must be strictly positive (RQD at most 100)")]
    NonPositiveComponent(&'static str),
    #[error("Q-value {0} is outside the supported class range (Q >= 0.01)")]
    OutOfRange(f64),
    #[error("unknown grouping scheme '{0}'")]
    UnknownScheme(String),
    #[error("invalid grouping scheme '{name}': {reason}")]
    InvalidScheme { name: String, reason: String },
    #[error("unknown Q-class '{0}'")]
    UnknownClass(String),
    #[error("samples are not sorted by chainage (index {0})")]
    UnsortedInput(usize),
}

/// The six Q-system inputs plus the Jn multiplier carried as a feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QComponents {
    pub rqd: f64,
    pub jn: f64,
    pub jr: f64,
    pub ja: f64,
    pub jw: f64,
    pub srf: f64,
    pub jn_mult: f64,
}

impl QComponents {
    pub fn validate(&self) -> Result<(), QError> {
        let checks = [
            ("rqd", self.rqd),
            ("jn", self.jn),
            ("jr", self.jr),
            ("ja", self.ja),
            ("jw", self.jw),
            ("srf", self.srf),
            ("jn_mult", self.jn_mult),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(QError::NonPositiveComponent(name));
            }
        }
        if self.rqd > 100.0 {
            return Err(QError::NonPositiveComponent("rqd"));
        }
        Ok(())
    }
}

pub fn compute_q(c: &QComponents) -> Result<f64, QError> {
    c.validate()?;
    Ok((c.rqd / c.jn) * (c.jr / c.ja) * (c.jw / c.srf))
}

pub fn compute_q_base(c: &QComponents) -> Result<f64, QError> {
    c.validate()?;
    Ok((c.rqd / c.jn) * (c.jr / c.ja))
}

/// Q-class letters, ordered from best (A) to worst (E2) rock quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QClass {
    A,
    B,
    C,
    D,
    E1,
    E2,
}

impl QClass {
    pub const ALL: [QClass; 6] = [QClass::A, QClass::B, QClass::C, QClass::D, QClass::E1, QClass::E2];

    pub fn as_str(self) -> &'static str {
        match self {
            QClass::A => "A",
            QClass::B => "B",
            QClass::C => "C",
            QClass::D => "D",
            QClass::E1 => "E1",
            QClass::E2 => "E2",
        }
    }

    /// Canonical index (A = 0 ... E2 = 5).
    pub fn index(self) -> usize {
        self as usize
    }

    /// The coarse class letter; E1 and E2 both collapse to "E".
    pub fn coarse(self) -> &'static str {
        match self {
            QClass::E1 | QClass::E2 => "E",
            other => other.as_str(),
        }
    }

    /// Half-open Q interval `[low, high)` of the class.
    pub fn q_interval(self) -> (f64, f64) {
        match self {
            QClass::A => (40.0, f64::INFINITY),
            QClass::B => (10.0, 40.0),
            QClass::C => (4.0, 10.0),
            QClass::D => (1.0, 4.0),
            QClass::E1 => (0.4, 1.0),
            QClass::E2 => (Q_FLOOR, 0.4),
        }
    }
}

impl fmt::Display for QClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QClass {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| QError::UnknownClass(s.to_string()))
    }
}

/// Lowest Q-value accepted by [`q_to_class`].
pub const Q_FLOOR: f64 = 0.01;

pub fn q_to_class(q: f64) -> Result<QClass, QError> {
    if !q.is_finite() || q < Q_FLOOR {
        return Err(QError::OutOfRange(q));
    }
    Ok(if q >= 40.0 {
        QClass::A
    } else if q >= 10.0 {
        QClass::B
    } else if q >= 4.0 {
        QClass::C
    } else if q >= 1.0 {
        QClass::D
    } else if q >= 0.4 {
        QClass::E1
    } else {
        QClass::E2
    })
}

/// Output of a grouping: a grouped label, or exclusion from the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grouped {
    Label(String),
    Drop,
}

/// Total mapping from Q-class to grouped label (or DROP).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupingScheme {
    name: String,
    mapping: [Grouped; 6],
}

const DROP: &str = "DROP";

impl GroupingScheme {
    pub fn new(name: impl Into<String>, mapping: [Grouped; 6]) -> Result<Self, QError> {
        let name = name.into();
        let distinct: std::collections::BTreeSet<_> =
            mapping.iter().filter(|g| **g != Grouped::Drop).collect();
        if distinct.len() < 2 {
            return Err(QError::InvalidScheme {
                name,
                reason: "needs at least two distinct labels".into(),
            });
        }
        Ok(Self { name, mapping })
    }

    /// Parses a comma-separated group list such as `"AB, CD, E"`. Each group is a
    /// concatenation of class letters; `E` stands for both E1 and E2. Classes
    /// not mentioned are dropped.
    pub fn from_groups(spec: &str) -> Result<Self, QError> {
        let mut mapping: [Grouped; 6] = std::array::from_fn(|_| Grouped::Drop);
        for group in spec.split(',').map(str::trim).filter(|g| !g.is_empty()) {
            let mut rest = group;
            while !rest.is_empty() {
                let (classes, len): (&[QClass], usize) = if rest.starts_with("E1") {
                    (&[QClass::E1], 2)
                } else if rest.starts_with("E2") {
                    (&[QClass::E2], 2)
                } else if rest.starts_with('E') {
                    (&[QClass::E1, QClass::E2], 1)
                } else {
                    let head = rest.get(..1).unwrap_or("?");
                    let c: QClass = head.parse().map_err(|_| QError::InvalidScheme {
                        name: spec.to_string(),
                        reason: format!("bad group '{group}'"),
                    })?;
                    match c {
                        QClass::A => (&[QClass::A], 1),
                        QClass::B => (&[QClass::B], 1),
                        QClass::C => (&[QClass::C], 1),
                        _ => (&[QClass::D], 1),
                    }
                };
                for c in classes {
                    if mapping[c.index()] != Grouped::Drop {
                        return Err(QError::InvalidScheme {
                            name: spec.to_string(),
                            reason: format!("class {c} appears in two groups"),
                        });
                    }
                    mapping[c.index()] = Grouped::Label(group.to_string());
                }
                rest = &rest[len..];
            }
        }
        Self::new(normalize_name(spec), mapping)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, cls: QClass) -> &Grouped {
        &self.mapping[cls.index()]
    }

    /// Grouped labels in order of their best member class.
    pub fn roster(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in &self.mapping {
            if let Grouped::Label(l) = g {
                if !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        out
    }

    /// Applies the scheme to a class histogram, returning grouped counts and
    /// the number of dropped samples.
    pub fn apply_counts(&self, counts: &BTreeMap<QClass, u64>) -> (BTreeMap<String, u64>, u64) {
        let mut grouped = BTreeMap::new();
        let mut dropped = 0;
        for (cls, &n) in counts {
            match self.apply(*cls) {
                Grouped::Label(l) => *grouped.entry(l.clone()).or_insert(0) += n,
                Grouped::Drop => dropped += n,
            }
        }
        (grouped, dropped)
    }

    fn to_json_map(&self) -> BTreeMap<String, String> {
        QClass::ALL
            .iter()
            .map(|c| {
                let v = match self.apply(*c) {
                    Grouped::Label(l) => l.clone(),
                    Grouped::Drop => DROP.to_string(),
                };
                (c.as_str().to_string(), v)
            })
            .collect()
    }
}

fn normalize_name(name: &str) -> String {
    name.split(',').map(str::trim).collect::<Vec<_>>().join(",")
}

pub fn apply_grouping(cls: QClass, scheme: &GroupingScheme) -> Grouped {
    scheme.apply(cls).clone()
}

/// The grouping schemes that ship with the crate: the eight grouped datasets
/// of the reference study plus the binary `ABCD,E` split.
pub fn builtin_schemes() -> Vec<GroupingScheme> {
    [
        "A, B, C, D, E1, E2",
        "A, B, C, D, E",
        "AB, C, D, E",
        "AB, CD, E",
        "ABCDE1, E2",
        "AB, CDE",
        "AB, DE",
        "A, C, E",
        "ABCD, E",
    ]
    .iter()
    .map(|s| GroupingScheme::from_groups(s).expect("builtin scheme"))
    .collect()
}

/// Registry of schemes addressable by name. Names are compared with
/// whitespace around commas ignored.
#[derive(Debug, Clone)]
pub struct SchemeRegistry {
    schemes: Vec<GroupingScheme>,
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self { schemes: builtin_schemes() }
    }
}

impl SchemeRegistry {
    pub fn get(&self, name: &str) -> Result<&GroupingScheme, QError> {
        let key = normalize_name(name);
        self.schemes
            .iter()
            .find(|s| s.name == key)
            .ok_or(QError::UnknownScheme(name.to_string()))
    }

    pub fn schemes(&self) -> &[GroupingScheme] {
        &self.schemes
    }

    pub fn insert(&mut self, scheme: GroupingScheme) {
        self.schemes.retain(|s| s.name != scheme.name);
        self.schemes.push(scheme);
    }

    /// Loads schemes from `{"name": {"A": "AB", ..., "C": "DROP"}}`. Every
    /// class must be mapped.
    pub fn load_json(&mut self, json: &str) -> Result<(), QError> {
        let raw: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(json).map_err(|e| QError::InvalidScheme {
                name: "<json>".into(),
                reason: e.to_string(),
            })?;
        for (name, map) in raw {
            let mut mapping: [Option<Grouped>; 6] = Default::default();
            for (k, v) in &map {
                let cls: QClass = k.parse()?;
                mapping[cls.index()] = Some(if v == DROP {
                    Grouped::Drop
                } else {
                    Grouped::Label(v.clone())
                });
            }
            let mut full: [Grouped; 6] = std::array::from_fn(|_| Grouped::Drop);
            for (i, m) in mapping.into_iter().enumerate() {
                full[i] = m.ok_or_else(|| QError::InvalidScheme {
                    name: name.clone(),
                    reason: format!("class {} is not mapped", QClass::ALL[i]),
                })?;
            }
            self.insert(GroupingScheme::new(normalize_name(&name), full)?);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<_, _> = self
            .schemes
            .iter()
            .map(|s| (s.name.clone(), s.to_json_map()))
            .collect();
        serde_json::to_string_pretty(&map).expect("scheme map serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ZoneTag {
    #[default]
    Regular,
    Transition,
}

impl ZoneTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ZoneTag::Regular => "regular",
            ZoneTag::Transition => "transition",
        }
    }
}

impl FromStr for ZoneTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regular" | "" => Ok(ZoneTag::Regular),
            "transition" => Ok(ZoneTag::Transition),
            other => Err(format!("unknown zone tag '{other}'")),
        }
    }
}

/// Tags samples lying in the `window_m` metres following a class change.
///
/// A change boundary sits at the chainage of the first sample of the new
/// class. A sample at chainage `x` is `Transition` when some boundary `b`
/// satisfies `b <= x < b + window_m`; the boundary sample itself is always
/// tagged, so `window_m = 0` tags exactly the boundary samples.
pub fn tag_transition_zones(samples: &[(f64, QClass)], window_m: f64) -> Result<Vec<ZoneTag>, QError> {
    for i in 1..samples.len() {
        if samples[i].0 < samples[i - 1].0 {
            return Err(QError::UnsortedInput(i));
        }
    }
    let mut tags = Vec::with_capacity(samples.len());
    let mut last_boundary: Option<f64> = None;
    for (i, &(x, cls)) in samples.iter().enumerate() {
        if i > 0 && cls != samples[i - 1].1 {
            last_boundary = Some(x);
        }
        // Boundaries only move forward, so the most recent one decides.
        let tag = match last_boundary {
            Some(b) if x == b || x - b < window_m => ZoneTag::Transition,
            _ => ZoneTag::Regular,
        };
        tags.push(tag);
    }
    Ok(tags)
}
