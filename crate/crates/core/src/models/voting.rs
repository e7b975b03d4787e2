use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, ModelError, ModelSpec, Task, TrainedModel};
use crate::preprocess::{fit_scaler, Scaler, ScalerKind};
use crate::table::{Features, Matrix, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteMode {
    /// Plurality of member labels; ties go to the lower class index.
    Hard,
    /// Argmax of the mean member probabilities.
    Soft,
    /// Mean of member regression outputs.
    Average,
}

impl VoteMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VoteMode::Hard => "hard",
            VoteMode::Soft => "soft",
            VoteMode::Average => "average",
        }
    }
}

impl fmt::Display for VoteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VoteMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "hard" => Ok(VoteMode::Hard),
            "soft" => Ok(VoteMode::Soft),
            "average" => Ok(VoteMode::Average),
            _ => Err(ModelError::BadHyperparameter(format!("vote_mode '{s}'"))),
        }
    }
}

/// One ensemble member: its own scaler in front of its own learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingMember {
    pub name: String,
    #[serde(default)]
    pub scaler: ScalerKind,
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedMember {
    pub name: String,
    pub scaler: Scaler,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingModel {
    pub mode: VoteMode,
    pub members: Vec<FittedMember>,
}

impl VotingModel {
    /// Members train in parallel, each on its own scaled copy of `x`.
    pub(crate) fn fit(task: Task, mode: VoteMode, members: &[VotingMember], x: &Features, y: &Target) -> Result<Self, ModelError> {
        if members.len() < 2 {
            return Err(ModelError::EmptyEnsemble(members.len()));
        }
        match (task, mode) {
            (Task::Classification, VoteMode::Average) | (Task::Regression, VoteMode::Hard | VoteMode::Soft) => {
                return Err(ModelError::BadHyperparameter(format!("vote_mode {mode} for {task}")));
            }
            _ => {}
        }
        let fitted = members
            .par_iter()
            .map(|m| {
                if m.spec.task != task {
                    return Err(ModelError::TaskMismatch(format!("member '{}' is {}", m.name, m.spec.task)));
                }
                let scaler = fit_scaler(&x.matrix, m.scaler).map_err(|e| ModelError::BadInput(e.to_string()))?;
                let scaled = Features::new(x.names.clone(), scaler.transform(&x.matrix));
                Ok(FittedMember { name: m.name.clone(), scaler, model: fit(&m.spec, &scaled, y)? })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        if fitted.windows(2).any(|w| w[0].model.roster != w[1].model.roster) {
            return Err(ModelError::HeterogeneousRoster);
        }
        Ok(Self { mode, members: fitted })
    }

    fn scaled(&self, m: &FittedMember, x: &Features) -> Features {
        Features::new(x.names.clone(), m.scaler.transform(&x.matrix))
    }

    pub(crate) fn member_labels(&self, x: &Features) -> Result<Vec<Vec<usize>>, ModelError> {
        self.members.iter().map(|m| m.model.predict(&self.scaled(m, x))).collect()
    }

    pub(crate) fn predict_proba(&self, x: &Features, n_classes: usize) -> Result<Matrix, ModelError> {
        let n = x.n_rows();
        let k = self.members.len() as f64;
        let mut out = Matrix::zeros(n, n_classes);
        match self.mode {
            VoteMode::Hard => {
                for labels in self.member_labels(x)? {
                    for (i, l) in labels.into_iter().enumerate() {
                        out.row_mut(i)[l] += 1.0 / k;
                    }
                }
            }
            _ => {
                for m in &self.members {
                    let p = m.model.predict_proba(&self.scaled(m, x))?;
                    for (o, v) in out.as_mut_slice().iter_mut().zip(p.as_slice()) {
                        *o += v;
                    }
                }
                out.as_mut_slice().iter_mut().for_each(|o| *o /= k);
            }
        }
        Ok(out)
    }

    pub(crate) fn predict(&self, x: &Features, n_classes: usize) -> Result<Vec<usize>, ModelError> {
        match self.mode {
            VoteMode::Hard => {
                let all = self.member_labels(x)?;
                Ok((0..x.n_rows())
                    .map(|i| {
                        let mut votes = vec![0usize; n_classes];
                        for labels in &all {
                            votes[labels[i]] += 1;
                        }
                        argmax_usize(&votes)
                    })
                    .collect())
            }
            _ => Ok(super::argmax_rows(&self.predict_proba(x, n_classes)?)),
        }
    }

    pub(crate) fn predict_value(&self, x: &Features) -> Result<Vec<f64>, ModelError> {
        let mut out = vec![0.0; x.n_rows()];
        for m in &self.members {
            for (o, v) in out.iter_mut().zip(m.model.predict_value(&self.scaled(m, x))?) {
                *o += v;
            }
        }
        let k = self.members.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        Ok(out)
    }
}

fn argmax_usize(v: &[usize]) -> usize {
    let mut best = 0;
    for c in 1..v.len() {
        if v[c] > v[best] {
            best = c;
        }
    }
    best
}
