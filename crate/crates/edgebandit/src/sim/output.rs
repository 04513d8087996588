//! Stable file outputs: per-slot trace CSV, checkpoint metrics CSV,
//! comparison curves, sweep summaries, and a small SVG plot emitter.
//!
//! Writers are atomic (temp file then rename) so a failed run never leaves
//! a partial artifact, and formatting is fixed-precision so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::sim::run::{MetricsReport, SlotTrace};

fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let res = std::fs::write(&tmp, contents).and_then(|()| std::fs::rename(&tmp, path));
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// Station ids joined by `|` (CSV-safe).
fn fmt_selected(sbs: &[usize]) -> String {
    sbs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("|")
}

/// Per-slot trace: `t,phase,selected,utility,oracle_utility,regret_cum`.
pub fn trace_csv(traces: &[SlotTrace]) -> String {
    let mut out = String::from("t,phase,selected,utility,oracle_utility,regret_cum\n");
    for tr in traces {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            tr.t,
            tr.phase.as_str(),
            fmt_selected(&tr.selected),
            fmt_f64(tr.realized_utility),
            fmt_f64(tr.oracle_expected),
            fmt_f64(tr.cum_regret)
        )
        .expect("string write");
    }
    out
}

pub fn write_trace_csv(path: &Path, traces: &[SlotTrace]) -> Result<()> {
    atomic_write(path, &trace_csv(traces))
}

/// Checkpoint metrics: `checkpoint,mse_visited,mse_all,edge_frac`.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("checkpoint,mse_visited,mse_all,edge_frac\n");
    for c in &report.checkpoints {
        writeln!(
            out,
            "{},{},{},{}",
            c.t,
            fmt_f64(c.mse_visited),
            fmt_f64(c.mse_all),
            fmt_f64(c.edge_frac)
        )
        .expect("string write");
    }
    out
}

pub fn write_metrics_csv(path: &Path, report: &MetricsReport) -> Result<()> {
    atomic_write(path, &metrics_csv(report))
}

/// One named curve sampled per slot.
pub struct Curve {
    pub name: String,
    pub values: Vec<f64>,
}

/// Comparison table: `t,<name>,...` with one row per slot.
pub fn compare_csv(curves: &[Curve]) -> String {
    let mut out = String::from("t");
    for c in curves {
        out.push(',');
        out.push_str(&c.name);
    }
    out.push('\n');
    let slots = curves.iter().map(|c| c.values.len()).max().unwrap_or(0);
    for i in 0..slots {
        write!(out, "{}", i + 1).expect("string write");
        for c in curves {
            out.push(',');
            out.push_str(&fmt_f64(c.values.get(i).copied().unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

pub fn write_compare_csv(path: &Path, curves: &[Curve]) -> Result<()> {
    atomic_write(path, &compare_csv(curves))
}

/// One sweep summary row.
pub struct SweepRow {
    pub axis: String,
    pub axis_value: String,
    pub policy: String,
    pub final_utility: f64,
    pub final_regret: f64,
}

/// Sweep summary: `axis_value,policy,final_utility,final_regret`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value,policy,final_utility,final_regret\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.axis_value,
            r.policy,
            fmt_f64(r.final_utility),
            fmt_f64(r.final_regret)
        )
        .expect("string write");
    }
    out
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    atomic_write(path, &sweep_csv(rows))
}

const SVG_COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Minimal polyline chart of the curves (x = slot, y = value).
pub fn curves_svg(title: &str, curves: &[Curve]) -> String {
    let (w, h) = (860.0f64, 520.0f64);
    let (ml, mr, mt, mb) = (70.0, 30.0, 40.0, 50.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;
    let max_x = curves.iter().map(|c| c.values.len()).max().unwrap_or(1).max(1) as f64;
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for &v in &c.values {
            if v.is_finite() {
                min_y = min_y.min(v);
                max_y = max_y.max(v);
            }
        }
    }
    if !min_y.is_finite() {
        min_y = 0.0;
        max_y = 1.0;
    }
    min_y = min_y.min(0.0);
    if max_y <= min_y {
        max_y = min_y + 1.0;
    }
    let sx = |i: usize| ml + (i as f64 + 1.0) / max_x * plot_w;
    let sy = |v: f64| mt + (1.0 - (v - min_y) / (max_y - min_y)) * plot_h;

    let mut out = String::new();
    write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    )
    .expect("string write");
    // axes
    write!(
        out,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb,
        h - mb
    )
    .expect("string write");
    write!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">slot</text>\n\
         <text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">value</text>\n",
        ml + plot_w / 2.0,
        h - 12.0,
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    )
    .expect("string write");
    // y-axis extremes
    write!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        ml - 6.0,
        mt + 4.0,
        fmt_f64(max_y),
        ml - 6.0,
        h - mb + 4.0,
        fmt_f64(min_y)
    )
    .expect("string write");

    for (k, c) in curves.iter().enumerate() {
        let color = SVG_COLORS[k % SVG_COLORS.len()];
        let mut points = String::new();
        for (i, &v) in c.values.iter().enumerate() {
            if v.is_finite() {
                write!(points, "{:.2},{:.2} ", sx(i), sy(v)).expect("string write");
            }
        }
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.trim_end()
        )
        .expect("string write");
        // legend
        let ly = mt + 16.0 * k as f64;
        writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            w - mr - 150.0,
            ly - 2.0,
            w - mr - 132.0,
            ly + 3.0,
            c.name
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_curves_svg(path: &Path, title: &str, curves: &[Curve]) -> Result<()> {
    atomic_write(path, &curves_svg(title, curves))
}
