//! Drillhole and blasting-round ingestion.
//!
//! Two CSV files describe a tunnel dataset:
//!
//! - `drillholes.csv`: `hole_id, round_id, depth_m` and the eight processed
//!   MWD parameters, one row per depth reading;
//! - `rounds.csv`: `round_id, tunnel_id, start_chainage_m, length_m,
//!   overburden_m, tunnel_width_m, jn_mult` and either `q_value` or the six
//!   Q components `rqd, jn, jr, ja, jw, srf` (blank cells mean absent).
//!
//! Files are UTF-8 with `,` delimiters and `.` decimal separators.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsystem::QComponents;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("bad value at row {row}, column '{column}': {reason}")]
    BadValue { row: u64, column: String, reason: String },
    #[error("drillhole references unknown round '{0}'")]
    OrphanHole(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Number of MWD parameters per reading.
pub const N_PARAMS: usize = 8;

/// The eight processed MWD parameters, in canonical order.
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "PenetrNorm",
    "PenetrRMS",
    "RotaPressNorm",
    "RotaPressRMS",
    "FeedPressNorm",
    "HammerPressNorm",
    "WaterFlowNorm",
    "WaterFlowRMS",
];

/// CSV column names of the parameters, aligned with [`PARAM_NAMES`].
pub const PARAM_COLUMNS: [&str; N_PARAMS] = [
    "penetr_norm",
    "penetr_rms",
    "rota_press_norm",
    "rota_press_rms",
    "feed_press_norm",
    "hammer_press_norm",
    "water_flow_norm",
    "water_flow_rms",
];

/// One depth-indexed reading of the eight MWD parameters for one hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrillholeRecord {
    pub hole_id: String,
    pub round_id: String,
    pub depth_m: f64,
    /// Parameter values in [`PARAM_NAMES`] order.
    pub values: [f64; N_PARAMS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlastingRound {
    pub round_id: String,
    pub tunnel_id: String,
    pub start_chainage_m: f64,
    pub length_m: f64,
    pub overburden_m: f64,
    pub tunnel_width_m: f64,
    pub jn_mult: f64,
    pub q_components: Option<QComponents>,
    pub q_value: Option<f64>,
}

impl BlastingRound {
    pub fn end_chainage_m(&self) -> f64 {
        self.start_chainage_m + self.length_m
    }

    /// Q-value from the components when present, otherwise the stored value.
    pub fn q(&self) -> Option<f64> {
        match &self.q_components {
            Some(c) => crate::qsystem::compute_q(c).ok(),
            None => self.q_value,
        }
    }

    pub fn q_base(&self) -> Option<f64> {
        self.q_components
            .as_ref()
            .and_then(|c| crate::qsystem::compute_q_base(c).ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub ingested_unix_s: u64,
}

/// Rounds ordered by `(tunnel_id, start_chainage_m)` and their readings keyed
/// by round, with row order preserved within each round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunnelDataset {
    pub rounds: Vec<BlastingRound>,
    pub holes: BTreeMap<String, Vec<DrillholeRecord>>,
    pub provenance: Provenance,
}

impl TunnelDataset {
    /// Builds a dataset, ordering rounds by tunnel and chainage.
    pub fn new(mut rounds: Vec<BlastingRound>, records: Vec<DrillholeRecord>, source: &str) -> Self {
        rounds.sort_by(|a, b| {
            a.tunnel_id
                .cmp(&b.tunnel_id)
                .then(a.start_chainage_m.total_cmp(&b.start_chainage_m))
        });
        let mut holes: BTreeMap<String, Vec<DrillholeRecord>> = BTreeMap::new();
        for r in records {
            holes.entry(r.round_id.clone()).or_default().push(r);
        }
        let ingested_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            rounds,
            holes,
            provenance: Provenance { source: source.to_string(), ingested_unix_s },
        }
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn n_records(&self) -> usize {
        self.holes.values().map(Vec::len).sum()
    }

    /// Number of distinct hole identifiers.
    pub fn n_holes(&self) -> usize {
        self.holes
            .values()
            .flatten()
            .map(|r| (r.round_id.as_str(), r.hole_id.as_str()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn records_for(&self, round_id: &str) -> &[DrillholeRecord] {
        self.holes.get(round_id).map_or(&[], Vec::as_slice)
    }

    /// Content equality, ignoring provenance.
    pub fn same_content(&self, other: &Self) -> bool {
        self.rounds == other.rounds && self.holes == other.holes
    }

    pub fn write_rounds_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(ROUND_HEADER)?;
        for r in &self.rounds {
            let c = r.q_components.as_ref();
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            out.write_record([
                r.round_id.clone(),
                r.tunnel_id.clone(),
                fmt_f64(r.start_chainage_m),
                fmt_f64(r.length_m),
                fmt_f64(r.overburden_m),
                fmt_f64(r.tunnel_width_m),
                fmt_f64(r.jn_mult),
                opt(r.q_value),
                opt(c.map(|c| c.rqd)),
                opt(c.map(|c| c.jn)),
                opt(c.map(|c| c.jr)),
                opt(c.map(|c| c.ja)),
                opt(c.map(|c| c.jw)),
                opt(c.map(|c| c.srf)),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes readings grouped by round in round order.
    pub fn write_drillholes_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["hole_id", "round_id", "depth_m"];
        header.extend(PARAM_COLUMNS);
        out.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(3 + N_PARAMS);
        for round in &self.rounds {
            for rec in self.records_for(&round.round_id) {
                row.clear();
                row.push(rec.hole_id.clone());
                row.push(rec.round_id.clone());
                row.push(fmt_f64(rec.depth_m));
                row.extend(rec.values.iter().map(|v| fmt_f64(*v)));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

const ROUND_HEADER: [&str; 14] = [
    "round_id",
    "tunnel_id",
    "start_chainage_m",
    "length_m",
    "overburden_m",
    "tunnel_width_m",
    "jn_mult",
    "q_value",
    "rqd",
    "jn",
    "jr",
    "ja",
    "jw",
    "srf",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Binds logical fields to CSV header names. The default uses the
/// canonical column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub hole_id: String,
    pub round_id: String,
    pub depth_m: String,
    pub params: [String; N_PARAMS],
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            hole_id: "hole_id".into(),
            round_id: "round_id".into(),
            depth_m: "depth_m".into(),
            params: PARAM_COLUMNS.map(String::from),
        }
    }
}

/// How parse errors on individual drillhole rows are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// First bad row aborts the parse.
    #[default]
    Strict,
    /// Bad rows are collected as rejections and skipped.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub row: u64,
    pub column: String,
    pub reason: String,
}

/// Row accounting for a parse: `rows_in == records_out + rejected.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseCounts {
    pub rows_in: usize,
    pub records_out: usize,
    pub rounds: usize,
    pub holes: usize,
    pub rejected: Vec<Rejection>,
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize, DatasetError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
}

fn parse_num(rec: &csv::StringRecord, idx: usize, column: &str, row: u64) -> Result<f64, DatasetError> {
    let raw = rec.get(idx).unwrap_or("").trim();
    let v: f64 = raw.parse().map_err(|_| DatasetError::BadValue {
        row,
        column: column.to_string(),
        reason: format!("'{raw}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(DatasetError::BadValue {
            row,
            column: column.to_string(),
            reason: format!("'{raw}' is not finite"),
        });
    }
    Ok(v)
}

fn parse_opt(rec: &csv::StringRecord, idx: Option<usize>, column: &str, row: u64) -> Result<Option<f64>, DatasetError> {
    match idx {
        Some(i) if !rec.get(i).unwrap_or("").trim().is_empty() => parse_num(rec, i, column, row).map(Some),
        _ => Ok(None),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Parses `rounds.csv`.
pub fn parse_rounds<R: Read>(source: R) -> Result<Vec<BlastingRound>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let req = |n: &str| header_index(&headers, n);
    let (i_round, i_tunnel, i_start, i_len, i_over, i_width) = (
        req("round_id")?,
        req("tunnel_id")?,
        req("start_chainage_m")?,
        req("length_m")?,
        req("overburden_m")?,
        req("tunnel_width_m")?,
    );
    let i_jn_mult = req("jn_mult")?;
    let opt = |n: &str| headers.iter().position(|h| h.trim() == n);
    let i_q = opt("q_value");
    let comp_names = ["rqd", "jn", "jr", "ja", "jw", "srf"];
    let i_comp: Vec<Option<usize>> = comp_names.iter().map(|n| opt(n)).collect();
    if i_q.is_none() && i_comp.iter().any(Option::is_none) {
        let missing = comp_names
            .iter()
            .zip(&i_comp)
            .find(|(_, i)| i.is_none())
            .map(|(n, _)| *n)
            .unwrap_or("q_value");
        return Err(DatasetError::MissingColumn(missing.to_string()));
    }
    let mut seen = BTreeSet::new();
    let mut rounds = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = line_of(&rec);
        let round_id = rec.get(i_round).unwrap_or("").to_string();
        if round_id.is_empty() || !seen.insert(round_id.clone()) {
            return Err(DatasetError::BadValue {
                row,
                column: "round_id".into(),
                reason: "empty or duplicate round id".into(),
            });
        }
        let jn_mult = parse_num(&rec, i_jn_mult, "jn_mult", row)?;
        let comps = comp_names
            .iter()
            .zip(&i_comp)
            .map(|(n, i)| parse_opt(&rec, *i, n, row))
            .collect::<Result<Vec<_>, _>>()?;
        let q_components = if comps.iter().all(Option::is_some) {
            let c: Vec<f64> = comps.into_iter().flatten().collect();
            Some(QComponents { rqd: c[0], jn: c[1], jr: c[2], ja: c[3], jw: c[4], srf: c[5], jn_mult })
        } else if comps.iter().any(Option::is_some) {
            return Err(DatasetError::BadValue {
                row,
                column: "rqd".into(),
                reason: "Q components must be all present or all blank".into(),
            });
        } else {
            None
        };
        let length_m = parse_num(&rec, i_len, "length_m", row)?;
        if length_m <= 0.0 {
            return Err(DatasetError::BadValue { row, column: "length_m".into(), reason: "must be positive".into() });
        }
        rounds.push(BlastingRound {
            round_id,
            tunnel_id: rec.get(i_tunnel).unwrap_or("").to_string(),
            start_chainage_m: parse_num(&rec, i_start, "start_chainage_m", row)?,
            length_m,
            overburden_m: parse_num(&rec, i_over, "overburden_m", row)?,
            tunnel_width_m: parse_num(&rec, i_width, "tunnel_width_m", row)?,
            jn_mult,
            q_components,
            q_value: parse_opt(&rec, i_q, "q_value", row)?,
        });
    }
    Ok(rounds)
}

/// Parses `drillholes.csv` against already-parsed rounds.
///
/// Rejects non-numeric or non-finite sensor values, negative depths and
/// depths that do not strictly increase within a hole (which includes
/// duplicate `(hole_id, depth_m)` rows). A hole whose round is unknown raises
/// [`DatasetError::OrphanHole`] in either mode.
pub fn parse_drillholes<R: Read>(
    source: R,
    rounds: Vec<BlastingRound>,
    schema: &ColumnMap,
    mode: ParseMode,
    source_name: &str,
) -> Result<(TunnelDataset, ParseCounts), DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let i_hole = header_index(&headers, &schema.hole_id)?;
    let i_round = header_index(&headers, &schema.round_id)?;
    let i_depth = header_index(&headers, &schema.depth_m)?;
    let i_params = schema
        .params
        .iter()
        .map(|p| header_index(&headers, p))
        .collect::<Result<Vec<_>, _>>()?;

    let known: BTreeSet<&str> = rounds.iter().map(|r| r.round_id.as_str()).collect();
    let mut last_depth: HashMap<(String, String), f64> = HashMap::new();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut rows_in = 0;

    for rec in rdr.records() {
        let rec = rec?;
        rows_in += 1;
        let row = line_of(&rec);
        let round_id = rec.get(i_round).unwrap_or("").to_string();
        if !known.contains(round_id.as_str()) {
            return Err(DatasetError::OrphanHole(round_id));
        }
        let parsed = (|| {
            let hole_id = rec.get(i_hole).unwrap_or("").to_string();
            let depth_m = parse_num(&rec, i_depth, &schema.depth_m, row)?;
            if depth_m < 0.0 {
                return Err(DatasetError::BadValue {
                    row,
                    column: schema.depth_m.clone(),
                    reason: "negative depth".into(),
                });
            }
            let mut values = [0.0; N_PARAMS];
            for (k, &i) in i_params.iter().enumerate() {
                values[k] = parse_num(&rec, i, &schema.params[k], row)?;
            }
            let key = (round_id.clone(), hole_id.clone());
            if let Some(&prev) = last_depth.get(&key) {
                if depth_m <= prev {
                    return Err(DatasetError::BadValue {
                        row,
                        column: schema.depth_m.clone(),
                        reason: format!("depth {depth_m} does not increase within hole '{hole_id}' (previous {prev})"),
                    });
                }
            }
            last_depth.insert(key, depth_m);
            Ok(DrillholeRecord { hole_id, round_id: round_id.clone(), depth_m, values })
        })();
        match (parsed, mode) {
            (Ok(r), _) => records.push(r),
            (Err(e), ParseMode::Strict) => return Err(e),
            (Err(DatasetError::BadValue { row, column, reason }), ParseMode::Lenient) => {
                rejected.push(Rejection { row, column, reason })
            }
            (Err(e), ParseMode::Lenient) => return Err(e),
        }
    }
    let dataset = TunnelDataset::new(rounds, records, source_name);
    let counts = ParseCounts {
        rows_in,
        records_out: dataset.n_records(),
        rounds: dataset.n_rounds(),
        holes: dataset.n_holes(),
        rejected,
    };
    Ok((dataset, counts))
}

/// Parses both files into a dataset.
pub fn parse_dataset<R1: Read, R2: Read>(
    drillholes: R1,
    rounds: R2,
    schema: &ColumnMap,
    mode: ParseMode,
    source_name: &str,
) -> Result<(TunnelDataset, ParseCounts), DatasetError> {
    let rounds = parse_rounds(rounds)?;
    parse_drillholes(drillholes, rounds, schema, mode, source_name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub check: String,
    pub ids: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

const CHECKS: [&str; 6] = [
    "overlap",
    "unlabeled round",
    "non-positive length",
    "round without drillholes",
    "depth order",
    "non-finite value",
];

/// Runs consistency checks; the dataset is not modified.
pub fn validate(dataset: &TunnelDataset) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |check: &str, ids: Vec<String>, message: String| {
        findings.push(Finding { check: check.to_string(), ids, message })
    };

    let mut by_tunnel: BTreeMap<&str, Vec<&BlastingRound>> = BTreeMap::new();
    for r in &dataset.rounds {
        by_tunnel.entry(&r.tunnel_id).or_default().push(r);
    }
    for rounds in by_tunnel.values_mut() {
        rounds.sort_by(|a, b| a.start_chainage_m.total_cmp(&b.start_chainage_m));
        for w in rounds.windows(2) {
            if w[1].start_chainage_m < w[0].end_chainage_m() - 1e-9 {
                push(
                    "overlap",
                    vec![w[0].round_id.clone(), w[1].round_id.clone()],
                    format!(
                        "round {} ends at {} m after round {} starts at {} m",
                        w[0].round_id,
                        w[0].end_chainage_m(),
                        w[1].round_id,
                        w[1].start_chainage_m
                    ),
                );
            }
        }
    }
    for r in &dataset.rounds {
        if r.q_components.is_none() && r.q_value.is_none() {
            push("unlabeled round", vec![r.round_id.clone()], "neither q_value nor Q components".into());
        }
        if !(r.length_m > 0.0) {
            push("non-positive length", vec![r.round_id.clone()], format!("length {}", r.length_m));
        }
        if dataset.records_for(&r.round_id).is_empty() {
            push("round without drillholes", vec![r.round_id.clone()], "no readings".into());
        }
    }
    for (round_id, recs) in &dataset.holes {
        let mut last: HashMap<&str, f64> = HashMap::new();
        for rec in recs {
            if let Some(&prev) = last.get(rec.hole_id.as_str()) {
                if rec.depth_m <= prev {
                    push(
                        "depth order",
                        vec![round_id.clone(), rec.hole_id.clone()],
                        format!("depth {} after {}", rec.depth_m, prev),
                    );
                }
            }
            last.insert(&rec.hole_id, rec.depth_m);
            if !rec.values.iter().all(|v| v.is_finite()) || !rec.depth_m.is_finite() {
                push("non-finite value", vec![round_id.clone(), rec.hole_id.clone()], "NaN or infinite".into());
            }
        }
    }

    let checks = CHECKS
        .iter()
        .map(|c| CheckOutcome { check: c.to_string(), passed: !findings.iter().any(|f| f.check == *c) })
        .collect();
    ValidationReport { checks, findings }
}
