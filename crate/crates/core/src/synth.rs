//! Seeded synthetic tunnels with planted, class-conditional MWD structure.
//!
//! Each round's class comes from a first-order chain: with probability
//! `p_stay` the previous class repeats, otherwise a class is drawn from
//! `proportions`. That mixture leaves `proportions` as the stationary
//! distribution. Readings follow a "hardness" axis h (A = 1.0 down to
//! E2 = 0.0 in steps of 0.2): each parameter's mean is
//! `base + unit * slope * h`, so penetration rises and pressures fall as
//! rock gets weaker. After a class change the mean slides linearly from the
//! old class to the new one over `smoothing_m` metres.
//!
//! Noise has two layers, both scaled by `noise_scale`: a correlated offset
//! per 1 m depth bin drawn from the class covariance, and independent
//! per-reading noise whose spread grows by half towards the weakest class.
//!
//! The constants are artifact choices with no claim of geological fidelity.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{fmt_f64, BlastingRound, DrillholeRecord, TunnelDataset, N_PARAMS};
use crate::features::SectionSample;
use crate::qsystem::{compute_q, q_to_class, QClass, QComponents};
use crate::rng::{child_rng, Rng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("section from round '{0}' has no planted ground truth")]
    NotSynthetic(String),
    #[error("ground truth csv: {0}")]
    Csv(String),
}

/// Class shares of the 1 m sections in the reference tunnels, A to E2.
pub const REFERENCE_PROPORTIONS: [f64; 6] = [
    539.0 / 23277.0,
    10057.0 / 23277.0,
    9208.0 / 23277.0,
    2571.0 / 23277.0,
    642.0 / 23277.0,
    260.0 / 23277.0,
];

/// Hardness of each class, A to E2.
pub const HARDNESS: [f64; 6] = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0];

/// Mean response per unit hardness, in parameter units.
pub const SLOPES: [f64; N_PARAMS] = [-1.0, -0.8, -0.7, -0.9, 0.7, 0.6, -0.7, -0.8];

const BASE: [f64; N_PARAMS] = [2.5, 0.6, 60.0, 8.0, 40.0, 150.0, 50.0, 6.0];
const UNIT: [f64; N_PARAMS] = [0.8, 0.2, 15.0, 3.0, 8.0, 20.0, 15.0, 2.0];

/// Norm/RMS pairs of the same sensor share this correlation in the default
/// offset covariance.
const PAIR_CORRELATION: f64 = 0.5;

// Discrete Q component levels. RQD is solved for and must land in [10, 100].
const JN: [f64; 7] = [2.0, 3.0, 4.0, 6.0, 9.0, 12.0, 15.0];
const JR: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];
const JA: [f64; 5] = [0.75, 1.0, 2.0, 4.0, 6.0];
const JW: [f64; 3] = [1.0, 0.66, 0.5];
const SRF: [f64; 3] = [1.0, 2.5, 5.0];
/// Q ranges used for sampling; A and E2 are open-ended in the class table.
const A_Q_MAX: f64 = 200.0;
const E2_Q_MIN: f64 = 0.1;

const WIDTHS: [f64; 4] = [8.5, 10.0, 11.5, 13.0];
/// Geometry drifts slowly and is recorded coarsely, so it does not single
/// out individual rounds.
const OVERBURDEN_STEP_SD: f64 = 0.5;
const OVERBURDEN_RESOLUTION: f64 = 5.0;
const WIDTH_CHANGE_P: f64 = 0.02;
const JN_MULT_P: f64 = 0.05;

/// Mean vector and offset covariance of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class: QClass,
    pub mean: [f64; N_PARAMS],
    pub cov: [[f64; N_PARAMS]; N_PARAMS],
    /// Per-reading noise standard deviation before `noise_scale`.
    pub reading_sd: [f64; N_PARAMS],
}

impl ClassModel {
    pub fn default_for(class: QClass) -> Self {
        let h = HARDNESS[class.index()];
        let mut mean = [0.0; N_PARAMS];
        let mut cov = [[0.0; N_PARAMS]; N_PARAMS];
        let mut reading_sd = [0.0; N_PARAMS];
        for p in 0..N_PARAMS {
            mean[p] = BASE[p] + UNIT[p] * SLOPES[p] * h;
            cov[p][p] = UNIT[p] * UNIT[p];
            reading_sd[p] = UNIT[p] * (1.0 + 0.5 * (1.0 - h));
        }
        for (a, b) in [(0, 1), (2, 3), (6, 7)] {
            cov[a][b] = PAIR_CORRELATION * UNIT[a] * UNIT[b];
            cov[b][a] = cov[a][b];
        }
        Self { class, mean, cov, reading_sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_rounds: usize,
    pub tunnel_id: String,
    /// Round lengths are uniform on this range, rounded to 0.1 m.
    pub round_length_m: (f64, f64),
    pub p_stay: f64,
    /// Chain restart distribution over A..E2.
    pub proportions: [f64; 6],
    pub classes: Vec<ClassModel>,
    pub noise_scale: f64,
    pub smoothing_m: f64,
    pub holes_per_round: usize,
    pub readings_per_m: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_rounds: 2000,
            tunnel_id: "SYN".into(),
            round_length_m: (3.0, 7.0),
            p_stay: 0.3,
            proportions: REFERENCE_PROPORTIONS,
            classes: QClass::ALL.iter().map(|&c| ClassModel::default_for(c)).collect(),
            noise_scale: 0.15,
            smoothing_m: 0.0,
            holes_per_round: 4,
            readings_per_m: 5.0,
            seed: 0,
        }
    }
}

/// Lower-triangular Cholesky factor of a PSD matrix. A zero pivot leaves its
/// column zero; a clearly negative pivot means the matrix is not PSD.
fn cholesky(cov: &[[f64; N_PARAMS]; N_PARAMS]) -> Option<[[f64; N_PARAMS]; N_PARAMS]> {
    let scale = (0..N_PARAMS).map(|i| cov[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut l = [[0.0; N_PARAMS]; N_PARAMS];
    for j in 0..N_PARAMS {
        let d = cov[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -tol {
            return None;
        }
        if d <= tol {
            for i in j + 1..N_PARAMS {
                let r = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if r.abs() > tol.sqrt() * scale.sqrt() {
                    return None;
                }
            }
            continue;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..N_PARAMS {
            l[i][j] = (cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    Some(l)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::BadSpec(m));
        if self.n_rounds == 0 {
            return bad("n_rounds must be positive".into());
        }
        let (lo, hi) = self.round_length_m;
        if !(lo >= 1.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("round length range [{lo}, {hi}] must satisfy 1 <= low <= high"));
        }
        if !(0.0..=1.0).contains(&self.p_stay) {
            return bad(format!("p_stay {} outside [0, 1]", self.p_stay));
        }
        let total: f64 = self.proportions.iter().sum();
        if self.proportions.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-6 {
            return bad("proportions must be non-negative and sum to 1".into());
        }
        if self.classes.len() != 6 || self.classes.iter().zip(QClass::ALL).any(|(m, c)| m.class != c) {
            return bad("classes must list one model per class, A to E2".into());
        }
        for m in &self.classes {
            let finite = m.mean.iter().chain(m.reading_sd.iter()).chain(m.cov.iter().flatten()).all(|v| v.is_finite());
            if !finite || m.reading_sd.iter().any(|s| *s < 0.0) {
                return bad(format!("class {} has non-finite or negative parameters", m.class));
            }
            let symmetric = (0..N_PARAMS).all(|i| (0..N_PARAMS).all(|j| m.cov[i][j] == m.cov[j][i]));
            if !symmetric || cholesky(&m.cov).is_none() {
                return bad(format!("class {} covariance is not symmetric positive semi-definite", m.class));
            }
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad("noise_scale must be finite and non-negative".into());
        }
        if !(self.smoothing_m >= 0.0 && self.smoothing_m.is_finite()) {
            return bad("smoothing_m must be finite and non-negative".into());
        }
        if self.holes_per_round == 0 || !(self.readings_per_m > 0.0) {
            return bad("need at least one hole and a positive reading rate".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTruth {
    pub round_id: String,
    pub tunnel_id: String,
    pub start_chainage_m: f64,
    pub length_m: f64,
    pub planted_class: QClass,
    pub q_value: f64,
}

/// Planted classes per round, keyed by round id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub rounds: Vec<RoundTruth>,
}

const TRUTH_HEADER: [&str; 6] = ["round_id", "tunnel_id", "start_chainage_m", "length_m", "planted_class", "q_value"];

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SynthError> {
        let err = |e: csv::Error| SynthError::Csv(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRUTH_HEADER).map_err(err)?;
        for r in &self.rounds {
            out.write_record([
                r.round_id.clone(),
                r.tunnel_id.clone(),
                fmt_f64(r.start_chainage_m),
                fmt_f64(r.length_m),
                r.planted_class.to_string(),
                fmt_f64(r.q_value),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| SynthError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, SynthError> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rounds = Vec::new();
        for rec in rdr.deserialize::<(String, String, f64, f64, String, f64)>() {
            let (round_id, tunnel_id, start, length, class, q) = rec.map_err(|e| SynthError::Csv(e.to_string()))?;
            let planted_class = class.parse().map_err(|e: crate::qsystem::QError| SynthError::Csv(e.to_string()))?;
            rounds.push(RoundTruth { round_id, tunnel_id, start_chainage_m: start, length_m: length, planted_class, q_value: q });
        }
        Ok(Self { rounds })
    }

    pub fn class_of(&self, round_id: &str) -> Option<QClass> {
        self.rounds.iter().find(|r| r.round_id == round_id).map(|r| r.planted_class)
    }
}

pub struct SynthTunnel {
    pub dataset: TunnelDataset,
    pub truth: GroundTruth,
}

fn pick<const N: usize>(rng: &mut Rng, levels: &[f64; N]) -> f64 {
    levels[rng.random_range(0..N)]
}

fn draw_class(rng: &mut Rng, proportions: &[f64; 6]) -> QClass {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, p) in QClass::ALL.iter().zip(proportions) {
        acc += p;
        if u < acc {
            return *c;
        }
    }
    // Rounding can leave the cumulative sum a hair under 1.
    *QClass::ALL.iter().zip(proportions).rev().find(|(_, p)| **p > 0.0).expect("validated").0
}

/// Q components whose Q falls in `class`'s band, from a log-uniform target Q.
fn draw_components(rng: &mut Rng, class: QClass, jn_mult: f64) -> QComponents {
    let (lo, hi) = class.q_interval();
    let (lo, hi) = (lo.max(E2_Q_MIN), hi.min(A_Q_MAX));
    loop {
        let target = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
        let (jn, jr, ja, jw, srf) = (pick(rng, &JN), pick(rng, &JR), pick(rng, &JA), pick(rng, &JW), pick(rng, &SRF));
        let rqd = (target * jn * ja * srf / (jr * jw) * 1e4).round() / 1e4;
        if !(10.0..=100.0).contains(&rqd) {
            continue;
        }
        let c = QComponents { rqd, jn, jr, ja, jw, srf, jn_mult };
        // Rounding RQD can nudge Q across a band edge; redraw if so.
        if compute_q(&c).ok().and_then(|q| q_to_class(q).ok()) == Some(class) {
            return c;
        }
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

struct Plan {
    round: BlastingRound,
    class: QClass,
    /// (boundary chainage, previous class) of the most recent class change.
    boundary: Option<(f64, QClass)>,
}

/// Generates the tunnel. Classes, lengths, geometry and labels are drawn in
/// one sequential stream; readings are drawn per round in parallel from
/// per-round streams, so output does not depend on the thread count.
pub fn generate(spec: &SynthSpec) -> Result<SynthTunnel, SynthError> {
    spec.validate()?;
    let chols: Vec<[[f64; N_PARAMS]; N_PARAMS]> = spec.classes.iter().map(|m| cholesky(&m.cov).expect("validated")).collect();
    let mut rng = child_rng(spec.seed, 0);
    let mut plans: Vec<Plan> = Vec::with_capacity(spec.n_rounds);
    let mut chainage = 0.0;
    let mut overburden: f64 = 50.0;
    let mut width = pick(&mut rng, &WIDTHS);
    let mut boundary = None;
    let (lo, hi) = spec.round_length_m;
    for i in 0..spec.n_rounds {
        let class = match plans.last() {
            Some(prev) if rng.random::<f64>() < spec.p_stay => prev.class,
            _ => draw_class(&mut rng, &spec.proportions),
        };
        if let Some(prev) = plans.last() {
            if prev.class != class {
                boundary = Some((chainage, prev.class));
            }
        }
        let length = ((lo + rng.random::<f64>() * (hi - lo)) * 10.0).round() / 10.0;
        overburden = (overburden + OVERBURDEN_STEP_SD * rng.sample::<f64, _>(StandardNormal)).clamp(5.0, 300.0);
        if rng.random::<f64>() < WIDTH_CHANGE_P {
            width = pick(&mut rng, &WIDTHS);
        }
        let jn_mult = if rng.random::<f64>() < JN_MULT_P { 2.0 } else { 1.0 };
        let comps = draw_components(&mut rng, class, jn_mult);
        let round = BlastingRound {
            round_id: format!("R{:05}", i + 1),
            tunnel_id: spec.tunnel_id.clone(),
            start_chainage_m: round6(chainage),
            length_m: length,
            overburden_m: (overburden / OVERBURDEN_RESOLUTION).round() * OVERBURDEN_RESOLUTION,
            tunnel_width_m: width,
            jn_mult,
            q_value: Some(compute_q(&comps).expect("drawn valid")),
            q_components: Some(comps),
        };
        plans.push(Plan { round, class, boundary });
        chainage += length;
    }

    let records: Vec<Vec<DrillholeRecord>> = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| readings(spec, &chols, plan, &mut child_rng(spec.seed, 1 + i as u64)))
        .collect();
    let truth = GroundTruth {
        rounds: plans
            .iter()
            .map(|p| RoundTruth {
                round_id: p.round.round_id.clone(),
                tunnel_id: p.round.tunnel_id.clone(),
                start_chainage_m: p.round.start_chainage_m,
                length_m: p.round.length_m,
                planted_class: p.class,
                q_value: p.round.q_value.expect("set above"),
            })
            .collect(),
    };
    let rounds = plans.into_iter().map(|p| p.round).collect();
    let mut dataset = TunnelDataset::new(rounds, records.into_iter().flatten().collect(), &format!("synthetic:seed={}", spec.seed));
    dataset.provenance.ingested_unix_s = 0;
    Ok(SynthTunnel { dataset, truth })
}

/// Class mean at chainage `x`, blended after the last class change.
fn mean_at(spec: &SynthSpec, plan: &Plan, x: f64) -> [f64; N_PARAMS] {
    let target = &spec.classes[plan.class.index()].mean;
    match plan.boundary {
        Some((b, prev)) if spec.smoothing_m > 0.0 && x - b < spec.smoothing_m => {
            let t = ((x - b) / spec.smoothing_m).clamp(0.0, 1.0);
            let from = &spec.classes[prev.index()].mean;
            std::array::from_fn(|p| (1.0 - t) * from[p] + t * target[p])
        }
        _ => *target,
    }
}

fn readings(spec: &SynthSpec, chols: &[[[f64; N_PARAMS]; N_PARAMS]], plan: &Plan, rng: &mut Rng) -> Vec<DrillholeRecord> {
    let model = &spec.classes[plan.class.index()];
    let chol = &chols[plan.class.index()];
    let r = &plan.round;
    let n_bins = r.length_m.ceil() as usize;
    let offsets: Vec<[f64; N_PARAMS]> = (0..n_bins)
        .map(|_| {
            let z: [f64; N_PARAMS] = std::array::from_fn(|_| rng.sample(StandardNormal));
            std::array::from_fn(|p| spec.noise_scale * (0..=p).map(|k| chol[p][k] * z[k]).sum::<f64>())
        })
        .collect();
    let n_readings = (r.length_m * spec.readings_per_m + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(spec.holes_per_round * n_readings);
    for h in 0..spec.holes_per_round {
        for j in 0..n_readings {
            let depth = (j as f64 + 0.5) / spec.readings_per_m;
            let mean = mean_at(spec, plan, r.start_chainage_m + depth);
            let off = &offsets[(depth.floor() as usize).min(n_bins - 1)];
            let values = std::array::from_fn(|p| {
                let e: f64 = rng.sample(StandardNormal);
                round6(mean[p] + off[p] + spec.noise_scale * model.reading_sd[p] * e)
            });
            out.push(DrillholeRecord { hole_id: format!("H{}", h + 1), round_id: r.round_id.clone(), depth_m: round6(depth), values });
        }
    }
    out
}

/// Planted class of every section, looked up by round and independent of
/// the section's Q label.
pub fn oracle_labels(samples: &[SectionSample], truth: &GroundTruth) -> Result<Vec<QClass>, SynthError> {
    let by_round: BTreeMap<&str, QClass> = truth.rounds.iter().map(|r| (r.round_id.as_str(), r.planted_class)).collect();
    samples
        .iter()
        .map(|s| by_round.get(s.round_id.as_str()).copied().ok_or_else(|| SynthError::NotSynthetic(s.round_id.clone())))
        .collect()
}
