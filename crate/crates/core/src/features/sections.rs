use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate_section, canonical_names, FeatureError, N_FEATURES};
use crate::dataset::{fmt_f64, BlastingRound, DrillholeRecord, TunnelDataset, N_PARAMS};
use crate::qsystem::{q_to_class, tag_transition_zones, QClass, ZoneTag};
use crate::table::{Features, Matrix};

/// One tunnel section with its 51 canonical features and labels.
///
/// Labels are optional so unlabeled sections can be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSample {
    pub tunnel_id: String,
    pub round_id: String,
    pub section_start_m: f64,
    pub features: Vec<f64>,
    pub label_q: Option<f64>,
    pub label_q_base: Option<f64>,
    pub label_class: Option<QClass>,
    pub zone: ZoneTag,
}

impl SectionSample {
    /// Feature table over a slice of samples, with canonical names.
    pub fn to_features(samples: &[SectionSample]) -> Features {
        let mut data = Vec::with_capacity(samples.len() * N_FEATURES);
        for s in samples {
            data.extend_from_slice(&s.features);
        }
        Features::new(canonical_names(), Matrix::new(samples.len(), N_FEATURES, data))
    }
}

/// Slices a round into `floor(length / section_length)` sections.
///
/// A reading at depth `d` belongs to section `floor(d / section_length)`;
/// readings beyond the last whole section are ignored. Every section carries
/// the round's labels.
pub fn section_samples(
    round: &BlastingRound,
    holes: &[DrillholeRecord],
    section_length_m: f64,
) -> Result<Vec<SectionSample>, FeatureError> {
    if !(section_length_m > 0.0) {
        return Err(FeatureError::BadSectionLength);
    }
    // Small tolerance so 5.0 / 1.0 style ratios are not lost to rounding.
    let n_sections = ((round.length_m / section_length_m) + 1e-9).floor() as usize;
    let mut buckets: Vec<[Vec<f64>; N_PARAMS]> = (0..n_sections).map(|_| Default::default()).collect();
    for rec in holes {
        let idx = (rec.depth_m / section_length_m).floor();
        if idx < 0.0 || idx as usize >= n_sections {
            continue;
        }
        let b = &mut buckets[idx as usize];
        for (p, v) in rec.values.iter().enumerate() {
            b[p].push(*v);
        }
    }
    let label_q = round.q();
    let label_q_base = round.q_base();
    let label_class = label_q.and_then(|q| q_to_class(q).ok());
    buckets
        .iter()
        .enumerate()
        .map(|(i, vals)| {
            if vals[0].is_empty() {
                return Err(FeatureError::EmptySection(i));
            }
            let features = aggregate_section(vals, (round.overburden_m, round.tunnel_width_m, round.jn_mult))?;
            Ok(SectionSample {
                tunnel_id: round.tunnel_id.clone(),
                round_id: round.round_id.clone(),
                section_start_m: round.start_chainage_m + i as f64 * section_length_m,
                features,
                label_q,
                label_q_base,
                label_class,
                zone: ZoneTag::Regular,
            })
        })
        .collect()
}

/// Sections for every round (in parallel), followed by transition-zone
/// tagging per tunnel over the chainage-ordered labeled sections.
pub fn aggregate_dataset(
    dataset: &TunnelDataset,
    section_length_m: f64,
    transition_window_m: f64,
) -> Result<Vec<SectionSample>, FeatureError> {
    let per_round: Vec<Vec<SectionSample>> = dataset
        .rounds
        .par_iter()
        .map(|r| section_samples(r, dataset.records_for(&r.round_id), section_length_m))
        .collect::<Result<_, _>>()?;
    let mut samples: Vec<SectionSample> = per_round.into_iter().flatten().collect();

    let mut by_tunnel: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_tunnel.entry(s.tunnel_id.clone()).or_default().push(i);
    }
    for idx in by_tunnel.values() {
        let mut labeled: Vec<usize> = idx.iter().copied().filter(|&i| samples[i].label_class.is_some()).collect();
        labeled.sort_by(|&a, &b| samples[a].section_start_m.total_cmp(&samples[b].section_start_m));
        let seq: Vec<(f64, QClass)> = labeled
            .iter()
            .map(|&i| (samples[i].section_start_m, samples[i].label_class.expect("filtered")))
            .collect();
        let tags = tag_transition_zones(&seq, transition_window_m).expect("sorted above");
        for (&i, t) in labeled.iter().zip(tags) {
            samples[i].zone = t;
        }
    }
    Ok(samples)
}

const ID_COLUMNS: [&str; 3] = ["tunnel_id", "round_id", "section_start_m"];
const LABEL_COLUMNS: [&str; 4] = ["label_q", "label_q_base", "label_class", "zone"];

/// Writes sections.csv: identifiers, the 51 features in canonical order,
/// labels and zone tag. Missing labels are written as blank cells.
pub fn write_sections_csv<W: Write>(samples: &[SectionSample], w: W) -> Result<(), FeatureError> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let mut header: Vec<String> = ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(canonical_names());
    header.extend(LABEL_COLUMNS.iter().map(|s| s.to_string()));
    out.write_record(&header).map_err(csv_err)?;
    for s in samples {
        let mut row = vec![s.tunnel_id.clone(), s.round_id.clone(), fmt_f64(s.section_start_m)];
        row.extend(s.features.iter().map(|v| fmt_f64(*v)));
        row.push(s.label_q.map(fmt_f64).unwrap_or_default());
        row.push(s.label_q_base.map(fmt_f64).unwrap_or_default());
        row.push(s.label_class.map(|c| c.to_string()).unwrap_or_default());
        row.push(s.zone.as_str().to_string());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| FeatureError::Csv(e.to_string()))?;
    Ok(())
}

/// Reads sections.csv. Feature columns are located by name; label and zone
/// columns may be absent or blank.
pub fn read_sections_csv<R: Read>(r: R) -> Result<Vec<SectionSample>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |n: &str| headers.iter().position(|h| h == n);
    let need = |n: &str| find(n).ok_or_else(|| FeatureError::UnknownFeature(n.to_string()));
    let (i_tunnel, i_round, i_start) = (need(ID_COLUMNS[0])?, need(ID_COLUMNS[1])?, need(ID_COLUMNS[2])?);
    let feat_idx = canonical_names().iter().map(|n| need(n)).collect::<Result<Vec<_>, _>>()?;
    let (i_q, i_qb, i_cls, i_zone) = (find("label_q"), find("label_q_base"), find("label_class"), find("zone"));

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, FeatureError> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FeatureError::Csv(format!("line {line}: bad number '{raw}' in column {}", &headers[i])))
        };
        let opt = |i: Option<usize>| -> Result<Option<f64>, FeatureError> {
            match i {
                Some(i) if !rec.get(i).unwrap_or("").is_empty() => num(i).map(Some),
                _ => Ok(None),
            }
        };
        let features = feat_idx.iter().map(|&i| num(i)).collect::<Result<Vec<_>, _>>()?;
        let label_class = match i_cls.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse::<QClass>().map_err(|e| FeatureError::Labels(e.to_string()))?),
            None => None,
        };
        let zone = match i_zone.and_then(|i| rec.get(i)) {
            Some(s) => s.parse::<ZoneTag>().map_err(FeatureError::Labels)?,
            None => ZoneTag::Regular,
        };
        out.push(SectionSample {
            tunnel_id: rec.get(i_tunnel).unwrap_or("").to_string(),
            round_id: rec.get(i_round).unwrap_or("").to_string(),
            section_start_m: num(i_start)?,
            features,
            label_q: opt(i_q)?,
            label_q_base: opt(i_qb)?,
            label_class,
            zone,
        });
    }
    Ok(out)
}
