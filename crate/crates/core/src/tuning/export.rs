use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::space::{Domain, SearchSpace};
use super::{SearchResult, TuningError};

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row per trial in index order: `trial,status,<params...>,objective`.
/// Failed trials leave the objective empty. Durations are left out so that
/// reruns export identical bytes.
pub fn trials_csv(space: &SearchSpace, result: &SearchResult) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["trial".to_string(), "status".to_string()];
    header.extend(space.params.iter().map(|p| p.name.clone()));
    header.push(result.objective.as_str().to_string());
    w.write_record(&header).expect("in-memory write");
    for t in &result.history {
        let mut row = vec![t.index.to_string(), t.status.as_str().to_string()];
        row.extend(space.params.iter().map(|p| t.config.get(&p.name).map(cell).unwrap_or_default()));
        row.push(t.objective.map(|o| o.to_string()).unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Axis metadata plus every trial, for a parallel-coordinates plot.
pub fn parallel_coordinates_json(space: &SearchSpace, result: &SearchResult) -> String {
    let axes: Vec<Value> = space
        .params
        .iter()
        .map(|p| match &p.domain {
            Domain::Int { low, high, .. } => json!({"name": p.name, "kind": "int", "low": low, "high": high, "log": false}),
            Domain::Real { low, high, log, .. } => json!({"name": p.name, "kind": "real", "low": low, "high": high, "log": log}),
            Domain::Categorical { choices, .. } => json!({"name": p.name, "kind": "categorical", "choices": choices}),
        })
        .collect();
    let trials: Vec<Value> = result
        .history
        .iter()
        .map(|t| {
            json!({
                "trial": t.index,
                "status": t.status.as_str(),
                "is_default": t.index == 0,
                "config": t.config,
                "objective": t.objective,
            })
        })
        .collect();
    let doc = json!({
        "objective": result.objective.as_str(),
        "best_trial": result.best.index,
        "axes": axes,
        "trials": trials,
    });
    serde_json::to_string_pretty(&doc).expect("json serializes")
}

/// Writes `trials.csv` and `parallel_coordinates.json` into `dir`.
pub fn export_history(space: &SearchSpace, result: &SearchResult, dir: &Path) -> Result<(), TuningError> {
    let io = |e: std::io::Error| TuningError::Io(e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("trials.csv"), trials_csv(space, result)).map_err(io)?;
    fs::write(dir.join("parallel_coordinates.json"), parallel_coordinates_json(space, result)).map_err(io)?;
    Ok(())
}
