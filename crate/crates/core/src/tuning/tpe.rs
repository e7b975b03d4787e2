use rand::Rng as _;
use rand_distr::StandardNormal;
use serde_json::Value;

use super::space::{Domain, SearchSpace};
use super::{Config, Trial};
use crate::rng::Rng;

const N_CANDIDATES: usize = 24;
const GOOD_FRACTION: f64 = 0.25;
/// Chance that a candidate copies a good trial's category instead of drawing
/// a fresh one.
const CATEGORY_KEEP: f64 = 0.8;

/// Kernel width in unit coordinates, shrinking slowly as trials accumulate.
fn bandwidth(n: usize) -> f64 {
    (0.25 * (n as f64).powf(-0.2)).max(0.05)
}

/// Log density of `v` under a product kernel estimate built from `set`,
/// mixed with one uniform pseudo-observation so it never vanishes.
fn log_density(space: &SearchSpace, set: &[&Trial], c: &Config) -> f64 {
    let w = set.len() as f64 + 1.0;
    let bw = bandwidth(set.len().max(1));
    let mut total = 0.0;
    for p in &space.params {
        let v = &c[&p.name];
        let d = match &p.domain {
            Domain::Categorical { choices, .. } => {
                let hits = set.iter().filter(|t| &t.config[&p.name] == v).count() as f64;
                (hits + 1.0 / choices.len() as f64) / w
            }
            dom => {
                let u = dom.to_unit(v).unwrap_or(0.5);
                let k: f64 = set
                    .iter()
                    .map(|t| {
                        let z = (u - dom.to_unit(&t.config[&p.name]).unwrap_or(0.5)) / bw;
                        (-0.5 * z * z).exp() / (bw * (2.0 * std::f64::consts::PI).sqrt())
                    })
                    .sum();
                (k + 1.0) / w
            }
        };
        total += d.ln();
    }
    total
}

fn perturb(space: &SearchSpace, good: &[&Trial], rng: &mut Rng) -> Config {
    let bw = bandwidth(good.len());
    space
        .params
        .iter()
        .map(|p| {
            let base = &good[rng.random_range(0..good.len())].config[&p.name];
            let v: Value = match &p.domain {
                Domain::Categorical { choices, .. } => {
                    if rng.random::<f64>() < CATEGORY_KEEP {
                        base.clone()
                    } else {
                        choices[rng.random_range(0..choices.len())].clone()
                    }
                }
                dom => {
                    let z: f64 = rng.sample(StandardNormal);
                    dom.value_at(dom.to_unit(base).unwrap_or(0.5) + bw * z)
                }
            };
            (p.name.clone(), v)
        })
        .collect()
}

/// Next configuration given the history so far. Falls back to a uniform
/// draw until two trials have completed.
pub(super) fn propose(space: &SearchSpace, history: &[Trial], rng: &mut Rng) -> Config {
    let mut done: Vec<&Trial> = history.iter().filter(|t| t.objective.is_some()).collect();
    if done.len() < 2 || space.params.is_empty() {
        return space.sample(rng);
    }
    done.sort_by(|a, b| b.objective.unwrap().total_cmp(&a.objective.unwrap()).then(a.index.cmp(&b.index)));
    let n_good = ((done.len() as f64 * GOOD_FRACTION).ceil() as usize).clamp(1, done.len() - 1);
    let (good, bad) = done.split_at(n_good);
    let mut best: Option<(f64, Config)> = None;
    for _ in 0..N_CANDIDATES {
        let c = perturb(space, good, rng);
        let score = log_density(space, good, &c) - log_density(space, bad, &c);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, c));
        }
    }
    best.expect("at least one candidate").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::tuning::space::Param;
    use crate::tuning::TrialStatus;
    use serde_json::json;

    fn trial(index: usize, x: f64, obj: f64) -> Trial {
        Trial {
            index,
            config: [("x".to_string(), json!(x))].into_iter().collect(),
            status: TrialStatus::Complete,
            objective: Some(obj),
            fold_values: vec![obj],
            error: None,
            duration_s: 0.0,
        }
    }

    #[test]
    fn proposals_concentrate_near_good_trials() {
        let space = SearchSpace::new(vec![Param::new("x", Domain::Real { low: 0.0, high: 10.0, log: false, default: 5.0 })]);
        let history: Vec<Trial> = (0..12).map(|i| trial(i, i as f64 * 10.0 / 11.0, -((i as f64 * 10.0 / 11.0) - 2.0).abs())).collect();
        let mut rng = rng_from_seed(3);
        let near = (0..50)
            .filter(|_| {
                let x = propose(&space, &history, &mut rng)["x"].as_f64().unwrap();
                (0.0..=10.0).contains(&x) && (x - 2.0).abs() < 2.5
            })
            .count();
        assert!(near >= 40, "{near}");
    }
}
