//! Static SVG plots. Every SVG embeds its plotted data as JSON in a
//! `<metadata>` element and has a CSV twin holding the same values, so tests
//! compare data rather than drawing instructions.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::dataset::fmt_f64;
use crate::eval::{Axis, ConfusionMatrix, RegressionReport};

struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self { width, height, body: String::new() }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.body, r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="#444" stroke-width="0.5"/>"##);
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, dash: bool) {
        let d = if dash { r##" stroke-dasharray="4 3""## } else { "" };
        let _ = writeln!(self.body, r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"{d}/>"##);
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" fill-opacity="0.6"/>"##);
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(self.body, r##"<text x="{x:.2}" y="{y:.2}" font-size="{size:.1}" text-anchor="{anchor}" font-family="sans-serif">{}</text>"##, esc(s));
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(self.body, r##"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.1}" stroke-opacity="0.7"/>"##, p.join(" "));
    }

    fn finish(self, data: &Value) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<metadata><![CDATA[{}]]></metadata>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            serde_json::to_string(data).expect("plot data serializes"),
            self.body,
            w = self.width,
            h = self.height,
        )
    }
}

/// Extracts the JSON embedded by any plot in this module.
pub fn embedded_data(svg: &str) -> Option<Value> {
    let start = svg.find("<metadata><![CDATA[")? + "<metadata><![CDATA[".len();
    let end = svg[start..].find("]]></metadata>")? + start;
    serde_json::from_str(&svg[start..end]).ok()
}

/// White to dark blue.
fn shade(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let c = |full: f64| (255.0 - v * (255.0 - full)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(8.0), c(48.0), c(107.0))
}

/// Counts, recall (row-normalized) and precision (column-normalized) panels.
pub fn confusion_triptych(cm: &ConfusionMatrix) -> (String, String) {
    let n = cm.n_classes();
    let counts: Vec<Vec<f64>> = cm.counts.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    let max = counts.iter().flatten().cloned().fold(0.0, f64::max).max(1.0);
    let panels = [("counts", counts.clone()), ("recall", cm.normalize(Axis::Row)), ("precision", cm.normalize(Axis::Column))];
    let (cell, pad, top, left) = (240.0 / n as f64, 40.0, 50.0, 60.0);
    let panel_w = n as f64 * cell + pad + left;
    let mut svg = Svg::new(3.0 * panel_w, top + n as f64 * cell + 50.0);
    let mut csv = String::from("panel,true,predicted,value\n");
    for (p, (name, m)) in panels.iter().enumerate() {
        let x0 = p as f64 * panel_w + left;
        svg.text(x0 + n as f64 * cell / 2.0, 25.0, 14.0, "middle", name);
        for i in 0..n {
            svg.text(x0 - 6.0, top + (i as f64 + 0.6) * cell, 11.0, "end", &cm.roster[i]);
            svg.text(x0 + (i as f64 + 0.5) * cell, top + n as f64 * cell + 16.0, 11.0, "middle", &cm.roster[i]);
            for j in 0..n {
                let v = m[i][j];
                let level = if *name == "counts" { v / max } else { v };
                svg.rect(x0 + j as f64 * cell, top + i as f64 * cell, cell, cell, &shade(level));
                let label = if *name == "counts" { format!("{v}") } else if v.is_finite() { format!("{v:.2}") } else { "-".into() };
                svg.text(x0 + (j as f64 + 0.5) * cell, top + (i as f64 + 0.6) * cell, 10.0, "middle", &label);
                let _ = writeln!(csv, "{name},{},{},{}", cm.roster[i], cm.roster[j], if v.is_finite() { fmt_f64(v) } else { String::new() });
            }
        }
    }
    svg.text(1.5 * panel_w, top + n as f64 * cell + 40.0, 12.0, "middle", "rows: true class, columns: predicted class");
    let finite = |m: &Vec<Vec<f64>>| -> Vec<Vec<Value>> {
        m.iter().map(|r| r.iter().map(|v| if v.is_finite() { json!(v) } else { Value::Null }).collect()).collect()
    };
    let data = json!({
        "kind": "confusion_triptych",
        "roster": cm.roster,
        "counts": cm.counts,
        "recall": finite(&panels[1].1),
        "precision": finite(&panels[2].1),
    });
    (svg.finish(&data), csv)
}

/// Side-by-side histogram of log10 Q and log10 Q-base over fixed bins.
pub fn q_histogram(q: &[f64], q_base: &[f64]) -> (String, String) {
    const LO: f64 = -2.0;
    const WIDTH: f64 = 0.25;
    const BINS: usize = 22;
    let bin = |v: f64| -> Option<usize> {
        let l = v.log10();
        if !l.is_finite() {
            return None;
        }
        Some((((l - LO) / WIDTH).floor().max(0.0) as usize).min(BINS - 1))
    };
    let mut hq = vec![0u64; BINS];
    let mut hb = vec![0u64; BINS];
    for b in q.iter().filter_map(|&v| bin(v)) {
        hq[b] += 1;
    }
    for b in q_base.iter().filter_map(|&v| bin(v)) {
        hb[b] += 1;
    }
    let max = hq.iter().chain(&hb).copied().max().unwrap_or(0).max(1) as f64;
    let (left, top, plot_w, plot_h) = (60.0, 40.0, 660.0, 260.0);
    let bw = plot_w / BINS as f64;
    let mut svg = Svg::new(left + plot_w + 40.0, top + plot_h + 60.0);
    svg.text(left + plot_w / 2.0, 24.0, 14.0, "middle", "Q and Q-base (log10 bins)");
    let mut csv = String::from("bin_low_log10,bin_high_log10,q_count,q_base_count\n");
    for i in 0..BINS {
        let x = left + i as f64 * bw;
        let hq_px = hq[i] as f64 / max * plot_h;
        let hb_px = hb[i] as f64 / max * plot_h;
        svg.rect(x + 1.0, top + plot_h - hq_px, bw / 2.0 - 1.0, hq_px, "#1f77b4");
        svg.rect(x + bw / 2.0, top + plot_h - hb_px, bw / 2.0 - 1.0, hb_px, "#ff7f0e");
        let lo = LO + i as f64 * WIDTH;
        if i % 4 == 0 {
            svg.text(x, top + plot_h + 16.0, 10.0, "middle", &format!("{:.2}", 10f64.powf(lo)));
        }
        let _ = writeln!(csv, "{},{},{},{}", fmt_f64(lo), fmt_f64(lo + WIDTH), hq[i], hb[i]);
    }
    svg.line(left, top + plot_h, left + plot_w, top + plot_h, "#000", false);
    svg.text(left + plot_w / 2.0, top + plot_h + 40.0, 12.0, "middle", "Q (blue) and Q-base (orange)");
    let data = json!({
        "kind": "q_histogram",
        "bin_low_log10": LO,
        "bin_width_log10": WIDTH,
        "q_counts": hq,
        "q_base_counts": hb,
    });
    (svg.finish(&data), csv)
}

/// Predicted vs true scatter with the identity line and a dashed red band
/// of `report.band` either side, plus a normal QQ panel of the residuals.
pub fn scatter_qq(report: &RegressionReport) -> (String, String) {
    let (size, pad, top) = (300.0, 60.0, 40.0);
    let mut svg = Svg::new(2.0 * (size + pad) + pad, top + size + 60.0);
    let lo = report.y_true.iter().chain(&report.y_pred).cloned().fold(f64::INFINITY, f64::min) - report.band;
    let hi = report.y_true.iter().chain(&report.y_pred).cloned().fold(f64::NEG_INFINITY, f64::max) + report.band;
    let span = (hi - lo).max(1e-9);
    let x0 = pad;
    let sx = |v: f64| x0 + (v - lo) / span * size;
    let sy = |v: f64| top + size - (v - lo) / span * size;
    svg.text(x0 + size / 2.0, 24.0, 14.0, "middle", "predicted vs true");
    svg.rect(x0, top, size, size, "none");
    svg.line(sx(lo), sy(lo), sx(hi), sy(hi), "#000", false);
    svg.line(sx(lo), sy(lo + report.band), sx(hi - report.band), sy(hi), "#d62728", true);
    svg.line(sx(lo + report.band), sy(lo), sx(hi), sy(hi - report.band), "#d62728", true);
    let mut csv = String::from("panel,x,y,outlier\n");
    for i in 0..report.n {
        let (t, p, o) = (report.y_true[i], report.y_pred[i], report.outliers[i]);
        svg.circle(sx(t), sy(p), 2.0, if o { "#d62728" } else { "#1f77b4" });
        let _ = writeln!(csv, "scatter,{},{},{}", fmt_f64(t), fmt_f64(p), o);
    }
    svg.text(x0 + size / 2.0, top + size + 30.0, 12.0, "middle", "true");

    let q0 = 2.0 * pad + size;
    let qs: Vec<f64> = report.qq_points.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let qlim = qs.iter().map(|v| v.abs()).fold(1.0, f64::max) * 1.05;
    let qx = |v: f64| q0 + (v + qlim) / (2.0 * qlim) * size;
    let qy = |v: f64| top + size - (v + qlim) / (2.0 * qlim) * size;
    svg.text(q0 + size / 2.0, 24.0, 14.0, "middle", "normal QQ of residuals");
    svg.rect(q0, top, size, size, "none");
    svg.line(qx(-qlim), qy(-qlim), qx(qlim), qy(qlim), "#000", false);
    for &(t, o) in &report.qq_points {
        svg.circle(qx(t), qy(o), 2.0, "#1f77b4");
        let _ = writeln!(csv, "qq,{},{},false", fmt_f64(t), fmt_f64(o));
    }
    svg.text(q0 + size / 2.0, top + size + 30.0, 12.0, "middle", "theoretical quantile");
    let data = json!({
        "kind": "scatter_qq",
        "band": report.band,
        "y_true": report.y_true,
        "y_pred": report.y_pred,
        "outliers": report.outliers,
        "qq_points": report.qq_points,
    });
    (svg.finish(&data), csv)
}

fn axis_position(axis: &Value, v: &Value) -> Option<f64> {
    match axis["kind"].as_str()? {
        "categorical" => {
            let choices = axis["choices"].as_array()?;
            let i = choices.iter().position(|c| c == v)?;
            Some(if choices.len() > 1 { i as f64 / (choices.len() - 1) as f64 } else { 0.5 })
        }
        _ => {
            let (lo, hi, x) = (axis["low"].as_f64()?, axis["high"].as_f64()?, v.as_f64()?);
            let (lo, hi, x) = if axis["log"].as_bool() == Some(true) { (lo.ln(), hi.ln(), x.ln()) } else { (lo, hi, x) };
            Some(if hi > lo { (x - lo) / (hi - lo) } else { 0.5 })
        }
    }
}

/// Parallel coordinates of every completed trial from a
/// `parallel_coordinates.json` document; the default-configuration trial is
/// drawn in red and the best trial in green.
pub fn parallel_coordinates(doc: &Value) -> (String, String) {
    let axes: Vec<Value> = doc["axes"].as_array().cloned().unwrap_or_default();
    let trials: Vec<Value> = doc["trials"].as_array().cloned().unwrap_or_default();
    let objective = doc["objective"].as_str().unwrap_or("objective").to_string();
    let best = doc["best_trial"].as_u64();
    let objs: Vec<f64> = trials.iter().filter_map(|t| t["objective"].as_f64()).collect();
    let (omin, omax) = (objs.iter().cloned().fold(f64::INFINITY, f64::min), objs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let n_axes = axes.len() + 1;
    let (left, top, gap, height) = (60.0, 40.0, 140.0, 260.0);
    let mut svg = Svg::new(left * 2.0 + gap * (n_axes.max(2) - 1) as f64, top + height + 60.0);
    let ax_x = |i: usize| left + i as f64 * gap;
    let y = |u: f64| top + height - u.clamp(0.0, 1.0) * height;
    let mut names: Vec<String> = axes.iter().map(|a| a["name"].as_str().unwrap_or("?").to_string()).collect();
    names.push(objective.clone());
    for (i, name) in names.iter().enumerate() {
        svg.line(ax_x(i), top, ax_x(i), top + height, "#000", false);
        svg.text(ax_x(i), top + height + 20.0, 11.0, "middle", name);
    }
    let mut csv = String::from("trial,status,axis,position\n");
    let mut lines = Vec::new();
    for t in &trials {
        let idx = t["trial"].as_u64().unwrap_or(0);
        let status = t["status"].as_str().unwrap_or("");
        let mut pts = Vec::new();
        for (i, a) in axes.iter().enumerate() {
            let name = a["name"].as_str().unwrap_or("");
            if let Some(u) = axis_position(a, &t["config"][name]) {
                pts.push((i, u));
            }
        }
        if let Some(o) = t["objective"].as_f64() {
            pts.push((axes.len(), if omax > omin { (o - omin) / (omax - omin) } else { 0.5 }));
        }
        for &(i, u) in &pts {
            let _ = writeln!(csv, "{idx},{status},{},{}", names[i], fmt_f64(u));
        }
        if t["objective"].is_null() {
            continue;
        }
        let color = if idx == 0 { "#d62728" } else if Some(idx) == best { "#2ca02c" } else { "#999999" };
        lines.push((idx == 0 || Some(idx) == best, pts.iter().map(|&(i, u)| (ax_x(i), y(u))).collect::<Vec<_>>(), color));
    }
    // Highlighted trials go on top.
    lines.sort_by_key(|l| l.0);
    for (hi, pts, color) in lines {
        svg.polyline(&pts, color, if hi { 2.0 } else { 1.0 });
    }
    let data = json!({ "kind": "parallel_coordinates", "objective": objective, "axes": axes, "trials": trials });
    (svg.finish(&data), csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{confusion_matrix, regression_metrics};

    #[test]
    fn triptych_embeds_its_matrix() {
        let roster = vec!["ABCD".to_string(), "E".to_string()];
        let cm = confusion_matrix(&[0, 0, 1, 1, 1], &[0, 1, 1, 1, 0], &roster).unwrap();
        let (svg, csv) = confusion_triptych(&cm);
        let data = embedded_data(&svg).unwrap();
        assert_eq!(data["counts"], json!([[1, 1], [1, 2]]));
        assert_eq!(data["recall"][1][1], json!(2.0 / 3.0));
        assert_eq!(csv.lines().count(), 1 + 3 * 4);
        assert!(svg.contains("&lt;").eq(&false));
    }

    #[test]
    fn scatter_marks_band_outliers() {
        let t = [0.0, 0.5, 1.0, 1.5, 2.0];
        let p = [0.0, 0.5, 1.5, 1.5, 2.0];
        let r = regression_metrics(&t, &p).unwrap();
        let (svg, csv) = scatter_qq(&r);
        let data = embedded_data(&svg).unwrap();
        assert_eq!(data["outliers"], json!([false, false, true, false, false]));
        assert!((data["band"].as_f64().unwrap() - 2f64.log10()).abs() < 1e-15);
        assert!(svg.contains("stroke-dasharray") && svg.contains("#d62728"));
        assert!(csv.contains("scatter,1,1.5,true"));
    }

    #[test]
    fn histogram_counts_every_value() {
        let (svg, csv) = q_histogram(&[0.05, 1.0, 5.0, 500.0], &[0.5, 2.0]);
        let data = embedded_data(&svg).unwrap();
        let total: u64 = data["q_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 4);
        assert_eq!(csv.lines().count(), 23);
    }
}
