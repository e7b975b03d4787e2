use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{RunConfig, TargetKind, TuneConfig, RUN_CONFIG_FILE};
use super::{plots, CliError, Command, CommonArgs};
use crate::dataset::{fmt_f64, parse_dataset, validate, ColumnMap, ParseMode, TunnelDataset};
use crate::eval::{holdout_eval, kfold_cv, residual_linear_correction, zone_filtered_eval, CvResult, EvalReport};
use crate::features::{aggregate_dataset, read_sections_csv, select_features, write_sections_csv, SectionSample};
use crate::models::Task;
use crate::preprocess::Pipeline;
use crate::qsystem::{Grouped, ZoneTag};
use crate::synth::{generate, SynthSpec};
use crate::table::{ClassLabels, Features, Target};
use crate::tuning::{apply_config, cv_evaluator, default_space, export_history, search, Objective, Sampler};

const BUNDLE_FORMAT: &str = "rockmass-model";
const BUNDLE_VERSION: u32 = 1;

/// What `train` saves and `predict` loads: the resolved run config and the
/// fitted pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub pipeline: Pipeline,
}

impl ModelBundle {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let f = File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let b: Self = serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if b.format != BUNDLE_FORMAT || b.version != BUNDLE_VERSION {
            return Err(CliError::data(format!("{}: not a version {BUNDLE_VERSION} model bundle", path.display())));
        }
        if b.pipeline.fitted.is_none() {
            return Err(CliError::data(format!("{}: bundle holds an unfitted pipeline", path.display())));
        }
        Ok(b)
    }
}

/// Files written by a command, relative to its output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(CliError::io)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents).map_err(CliError::io)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
        self.write(name, text + "\n")
    }

    fn plot(&mut self, stem: &str, (svg, csv): (String, String)) -> Result<(), CliError> {
        self.write(&format!("{stem}.svg"), svg)?;
        self.write(&format!("{stem}.csv"), csv)
    }

    fn finish(mut self, config: &RunConfig) -> Result<(), CliError> {
        config.write(&self.dir)?;
        self.files.push(RUN_CONFIG_FILE.to_string());
        println!("{}", json!({ "command": config.command, "out": self.dir, "files": self.files }));
        Ok(())
    }
}

pub(super) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { common, rounds, noise, smoothing } => {
            let mut c = RunConfig::resolve("synth", &common)?;
            let mut s = c.synth.take().unwrap_or_default();
            if let Some(v) = rounds {
                s.n_rounds = v;
            }
            if let Some(v) = noise {
                s.noise_scale = v;
            }
            if let Some(v) = smoothing {
                s.smoothing_m = v;
            }
            s.seed = c.seed;
            c.synth = Some(s);
            c.validate()?;
            synth(&c)
        }
        Command::Ingest { common } => ready("ingest", &common).and_then(|c| ingest(&c)),
        Command::Aggregate { common } => ready("aggregate", &common).and_then(|c| aggregate(&c)),
        Command::Train { common } => ready("train", &common).and_then(|c| train(&c)),
        Command::Cv { common } => ready("cv", &common).and_then(|c| cv(&c)),
        Command::Tune { common, trials, sampler, objective } => {
            let mut c = RunConfig::resolve("tune", &common)?;
            let mut t = c.tune.take().unwrap_or_default();
            if let Some(v) = trials {
                t.n_trials = v;
            }
            if let Some(v) = sampler {
                t.sampler = v.parse::<Sampler>()?;
            }
            if let Some(v) = objective {
                t.objective = Some(v.parse::<Objective>().map_err(|e| CliError::config(e.to_string()))?);
            }
            c.tune = Some(t);
            c.validate()?;
            tune(&c)
        }
        Command::Predict { common, model_file } => {
            let mut c = RunConfig::resolve("predict", &common)?;
            if let Some(p) = model_file {
                c.model_path = Some(p);
            }
            c.validate()?;
            predict(&c)
        }
        Command::Report { common, run } => {
            let mut c = RunConfig::resolve("report", &common)?;
            if let Some(p) = run {
                c.run_dir = Some(p);
            }
            c.validate()?;
            report(&c)
        }
    }
}

fn ready(command: &str, common: &CommonArgs) -> Result<RunConfig, CliError> {
    let c = RunConfig::resolve(command, common)?;
    c.validate()?;
    Ok(c)
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str, command: &str) -> Result<&'a PathBuf, CliError> {
    p.as_ref().ok_or_else(|| CliError::config(format!("{command} needs {flag}")))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn synth(c: &RunConfig) -> Result<(), CliError> {
    let spec: &SynthSpec = c.synth.as_ref().expect("set by dispatch");
    let t = generate(spec)?;
    let mut out = Outputs::create(&c.out)?;
    let mut buf = Vec::new();
    t.dataset.write_drillholes_csv(&mut buf)?;
    out.write("drillholes.csv", &buf)?;
    buf.clear();
    t.dataset.write_rounds_csv(&mut buf)?;
    out.write("rounds.csv", &buf)?;
    buf.clear();
    t.truth.write_csv(&mut buf)?;
    out.write("ground_truth.csv", &buf)?;
    out.finish(c)
}

fn load_dataset(c: &RunConfig) -> Result<(TunnelDataset, crate::dataset::ParseCounts), CliError> {
    let dir = required(&c.input, "--input", &c.command)?;
    let mode = if c.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let source = dir.display().to_string();
    let parsed = parse_dataset(open(&dir.join("drillholes.csv"))?, open(&dir.join("rounds.csv"))?, &ColumnMap::default(), mode, &source)?;
    Ok(parsed)
}

fn ingest(c: &RunConfig) -> Result<(), CliError> {
    let (ds, counts) = load_dataset(c)?;
    let report = validate(&ds);
    for f in &report.findings {
        log::warn!("{}: {} ({})", f.check, f.message, f.ids.join(", "));
    }
    let mut out = Outputs::create(&c.out)?;
    let mut buf = Vec::new();
    ds.write_drillholes_csv(&mut buf)?;
    out.write("drillholes.csv", &buf)?;
    buf.clear();
    ds.write_rounds_csv(&mut buf)?;
    out.write("rounds.csv", &buf)?;
    out.json("ingest_report.json", &json!({ "counts": counts, "validation": report }))?;
    if !c.lenient && !report.is_clean() {
        return Err(CliError::data(format!(
            "{} validation finding(s); see ingest_report.json or rerun with --lenient",
            report.findings.len()
        )));
    }
    out.finish(c)
}

fn aggregate(c: &RunConfig) -> Result<(), CliError> {
    let (ds, _) = load_dataset(c)?;
    let samples = aggregate_dataset(&ds, c.section_length_m, c.transition_window_m)?;
    if samples.is_empty() {
        return Err(CliError::data("no sections could be built from the input"));
    }
    let mut out = Outputs::create(&c.out)?;
    let mut buf = Vec::new();
    write_sections_csv(&samples, &mut buf)?;
    out.write("sections.csv", &buf)?;
    out.finish(c)
}

fn load_sections(c: &RunConfig) -> Result<Vec<SectionSample>, CliError> {
    let path = required(&c.sections, "--sections", &c.command)?;
    let samples = read_sections_csv(open(path)?)?;
    if samples.is_empty() {
        return Err(CliError::data(format!("{}: no sections", path.display())));
    }
    Ok(samples)
}

/// Labeled rows for the configured target, with their features and zones.
struct Prepared {
    x: Features,
    y: Target,
    zones: Vec<ZoneTag>,
}

fn prepare(c: &RunConfig, samples: &[SectionSample]) -> Result<Prepared, CliError> {
    let kind = c.feature_kind()?;
    let mut keep = Vec::new();
    let mut targets: Vec<Value> = Vec::new();
    match c.target {
        TargetKind::Class => {
            let scheme = c.scheme()?;
            for (i, s) in samples.iter().enumerate() {
                if let Some(Grouped::Label(l)) = s.label_class.map(|cls| scheme.apply(cls)) {
                    keep.push(i);
                    targets.push(Value::String(l.clone()));
                }
            }
        }
        TargetKind::LogQ | TargetKind::LogQBase => {
            for (i, s) in samples.iter().enumerate() {
                let q = if c.target == TargetKind::LogQ { s.label_q } else { s.label_q_base };
                if let Some(q) = q.filter(|q| *q > 0.0) {
                    keep.push(i);
                    targets.push(json!(q.log10()));
                }
            }
        }
    }
    if keep.is_empty() {
        return Err(CliError::data("no section carries a usable label for this target and grouping"));
    }
    let dropped = samples.len() - keep.len();
    if dropped > 0 {
        log::info!("{dropped} sections without a usable label were left out");
    }
    let kept: Vec<SectionSample> = keep.iter().map(|&i| samples[i].clone()).collect();
    let x = select_features(&SectionSample::to_features(&kept), kind)?;
    let zones = kept.iter().map(|s| s.zone).collect();
    let y = match c.target {
        TargetKind::Class => {
            let scheme = c.scheme()?;
            let labels: Vec<&str> = targets.iter().map(|v| v.as_str().expect("string label")).collect();
            let roster: Vec<String> = scheme.roster().into_iter().filter(|r| labels.contains(&r.as_str())).collect();
            if roster.len() < 2 {
                return Err(CliError::data(format!("need at least two classes, found {}", roster.len())));
            }
            Target::Classes(ClassLabels::from_strings(&roster, &labels).map_err(CliError::data)?)
        }
        _ => Target::Values(targets.iter().map(|v| v.as_f64().expect("numeric target")).collect()),
    };
    Ok(Prepared { x, y, zones })
}

fn cv_summary_csv(cv: &CvResult) -> String {
    let mut s = String::from("metric,mean,min,max\n");
    for (k, v) in &cv.summary {
        s.push_str(&format!("{k},{},{},{}\n", fmt_f64(v.mean), fmt_f64(v.min), fmt_f64(v.max)));
    }
    s
}

fn write_report_files(out: &mut Outputs, report: &EvalReport) -> Result<(), CliError> {
    out.write("eval_report.json", report.to_json() + "\n")?;
    out.write("metrics.csv", report.to_csv())?;
    if let Some(cm) = &report.confusion {
        out.write("confusion.csv", cm.to_csv())?;
        out.plot("confusion_triptych", plots::confusion_triptych(cm))?;
    }
    if let Some(r) = &report.regression {
        out.plot("scatter_qq", plots::scatter_qq(r))?;
    }
    Ok(())
}

fn train(c: &RunConfig) -> Result<(), CliError> {
    let samples = load_sections(c)?;
    let d = prepare(c, &samples)?;
    let mut out = Outputs::create(&c.out)?;
    let pipeline = match c.eval {
        super::EvalMode::Holdout | super::EvalMode::Both => {
            let (h, p) = holdout_eval(&c.pipeline, &d.x, &d.y, c.test_fraction, c.seed)?;
            write_report_files(&mut out, &h.report)?;
            let test_x = d.x.select_rows(&h.split.test);
            let test_y = d.y.select(&h.split.test);
            let test_zones: Vec<ZoneTag> = h.split.test.iter().map(|&i| d.zones[i]).collect();
            match c.target.task() {
                Task::Classification => {
                    let mut zones = serde_json::Map::new();
                    for z in [ZoneTag::Regular, ZoneTag::Transition] {
                        match zone_filtered_eval(&p, &test_x, &test_y, &test_zones, z) {
                            Ok((m, cm)) => {
                                zones.insert(z.as_str().into(), json!({ "n": cm.total(), "metrics": m, "confusion": cm }));
                            }
                            Err(e) => log::info!("no {} metrics: {e}", z.as_str()),
                        }
                    }
                    out.json("zone_metrics.json", &zones)?;
                }
                Task::Regression => {
                    let r = h.report.regression.as_ref().expect("regression report");
                    let lc = residual_linear_correction(&r.y_true, &r.y_pred)?;
                    out.json("correction.json", &json!({ "a": lc.a, "b": lc.b }))?;
                }
            }
            out.json("holdout_split.json", &h.split)?;
            p
        }
        super::EvalMode::Cv => {
            let mut p = Pipeline::new(c.pipeline.clone());
            p.fit(&d.x, &d.y)?;
            p
        }
    };
    if c.eval != super::EvalMode::Holdout {
        let r = kfold_cv(&c.pipeline, &d.x, &d.y, c.cv_folds, c.seed)?;
        out.json("cv_result.json", &r)?;
        out.write("cv_summary.csv", cv_summary_csv(&r))?;
    }
    let bundle = ModelBundle { format: BUNDLE_FORMAT.into(), version: BUNDLE_VERSION, config: c.clone(), pipeline };
    out.json("model.json", &bundle)?;
    out.finish(c)
}

fn cv(c: &RunConfig) -> Result<(), CliError> {
    let samples = load_sections(c)?;
    let d = prepare(c, &samples)?;
    let r = kfold_cv(&c.pipeline, &d.x, &d.y, c.cv_folds, c.seed)?;
    let mut out = Outputs::create(&c.out)?;
    out.json("cv_result.json", &r)?;
    out.write("cv_summary.csv", cv_summary_csv(&r))?;
    out.finish(c)
}

fn tune(c: &RunConfig) -> Result<(), CliError> {
    let t: &TuneConfig = c.tune.as_ref().expect("set by dispatch");
    let objective = t.objective.unwrap_or(match c.target.task() {
        Task::Classification => Objective::BalancedAccuracy,
        Task::Regression => Objective::R2,
    });
    let space = match &t.space {
        Some(s) => s.clone(),
        None => default_space(&c.pipeline.model),
    };
    let samples = load_sections(c)?;
    let d = prepare(c, &samples)?;
    let evaluator = cv_evaluator(&c.pipeline, &d.x, &d.y, c.cv_folds, c.seed, objective);
    let result = search(&space, objective, &evaluator, t.n_trials, t.sampler, c.seed)?;
    let best_pipeline = apply_config(&c.pipeline, &result.best.config)?;
    let mut out = Outputs::create(&c.out)?;
    export_history(&space, &result, &out.dir)?;
    out.files.push("trials.csv".into());
    out.files.push("parallel_coordinates.json".into());
    out.json(
        "best_config.json",
        &json!({
            "objective": objective.as_str(),
            "best_trial": result.best.index,
            "best_value": result.best.objective,
            "default_value": result.history[0].objective,
            "config": result.best.config,
            "pipeline": best_pipeline,
        }),
    )?;
    out.finish(c)
}

fn predict(c: &RunConfig) -> Result<(), CliError> {
    let path = required(&c.model_path, "--model-file", "predict")?;
    let bundle = ModelBundle::load(path)?;
    let samples = load_sections(c)?;
    let x = select_features(&SectionSample::to_features(&samples), bundle.config.feature_kind()?)?;
    let p = &bundle.pipeline;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::runtime(e.to_string());
    let ids = |s: &SectionSample| vec![s.tunnel_id.clone(), s.round_id.clone(), fmt_f64(s.section_start_m)];
    match bundle.config.target.task() {
        Task::Classification => {
            let roster = p.roster().expect("fitted classifier has a roster").to_vec();
            let labels = p.predict_labels(&x)?;
            let proba = p.predict_proba(&x)?;
            let mut header = vec!["tunnel_id".to_string(), "round_id".into(), "section_start_m".into(), "predicted_class".into()];
            header.extend(roster.iter().map(|r| format!("p_{r}")));
            w.write_record(&header).map_err(csv_err)?;
            for (i, s) in samples.iter().enumerate() {
                let mut row = ids(s);
                row.push(labels[i].clone());
                row.extend(proba.row(i).iter().map(|v| fmt_f64(*v)));
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        Task::Regression => {
            let values = p.predict_value(&x)?;
            let name = match bundle.config.target {
                TargetKind::LogQBase => "q_base",
                _ => "q",
            };
            w.write_record(["tunnel_id", "round_id", "section_start_m", &format!("predicted_log10_{name}"), &format!("predicted_{name}")])
                .map_err(csv_err)?;
            for (i, s) in samples.iter().enumerate() {
                let mut row = ids(s);
                row.push(fmt_f64(values[i]));
                row.push(fmt_f64(10f64.powf(values[i])));
                w.write_record(&row).map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
    let mut out = Outputs::create(&c.out)?;
    out.write("predictions.csv", bytes)?;
    out.finish(c)
}

fn report(c: &RunConfig) -> Result<(), CliError> {
    let run = required(&c.run_dir, "--run", "report")?;
    if !run.is_dir() {
        return Err(CliError::data(format!("{}: not a directory", run.display())));
    }
    let run_config = match run.join(RUN_CONFIG_FILE) {
        p if p.exists() => Some(RunConfig::load(&p).map_err(|e| CliError::data(e.message))?),
        _ => None,
    };
    let mut out = Outputs::create(&c.out)?;
    let eval_path = run.join("eval_report.json");
    if eval_path.exists() {
        let r: EvalReport = serde_json::from_reader(open(&eval_path)?).map_err(|e| CliError::data(format!("{}: {e}", eval_path.display())))?;
        if let Some(cm) = &r.confusion {
            out.plot("confusion_triptych", plots::confusion_triptych(cm))?;
        }
        if let Some(reg) = &r.regression {
            out.plot("scatter_qq", plots::scatter_qq(reg))?;
        }
    }
    let pc_path = run.join("parallel_coordinates.json");
    if pc_path.exists() {
        let doc: Value = serde_json::from_reader(open(&pc_path)?).map_err(|e| CliError::data(format!("{}: {e}", pc_path.display())))?;
        out.plot("parallel_coordinates", plots::parallel_coordinates(&doc))?;
    }
    // Section labels: the run's own sections.csv, else the one it read.
    let sections = [Some(run.join("sections.csv")), c.sections.clone(), run_config.as_ref().and_then(|r| r.sections.clone())]
        .into_iter()
        .flatten()
        .find(|p| p.exists());
    if let Some(p) = sections {
        let samples = read_sections_csv(open(&p)?)?;
        let q: Vec<f64> = samples.iter().filter_map(|s| s.label_q).collect();
        let qb: Vec<f64> = samples.iter().filter_map(|s| s.label_q_base).collect();
        if !q.is_empty() || !qb.is_empty() {
            out.plot("q_histogram", plots::q_histogram(&q, &qb))?;
        }
    }
    if out.files.is_empty() {
        return Err(CliError::data(format!("{}: nothing to report on", run.display())));
    }
    out.finish(c)
}
