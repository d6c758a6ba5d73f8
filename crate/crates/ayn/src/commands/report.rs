use std::fmt::Write as _;
use std::path::Path;

use ayn_core::train::TrainingLog;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::cli::ReportArgs;
use crate::error::{AynError, Result};
use crate::io::{read_text, write_text};
use crate::report::{Report, ReportRow};

#[derive(Debug, Serialize)]
struct CombinedRow<'a> {
    method: String,
    #[serde(flatten)]
    row: &'a ReportRow,
}

fn method_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_report(path: &Path) -> Result<Report> {
    serde_json::from_str(&read_text(path)?).map_err(|e| AynError::format(path, e.line(), e.to_string()))
}

/// A training log file or a checkpoint carrying one.
fn load_log(path: &Path) -> Result<TrainingLog> {
    let text = read_text(path)?;
    if let Ok(log) = serde_json::from_str::<TrainingLog>(&text) {
        return Ok(log);
    }
    Ok(Checkpoint::load(path)?.log)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

pub fn report(args: &ReportArgs) -> Result<()> {
    if args.reports.is_empty() && args.curves.is_empty() {
        return Err(AynError::Invalid(
            "nothing to report: give report files or --curves".into(),
        ));
    }
    let mut rows = Vec::new();
    for p in &args.reports {
        let r = load_report(p)?;
        let row = r
            .rows
            .into_iter()
            .find(|row| row.subset == args.subset)
            .ok_or_else(|| AynError::Invalid(format!("{} has no {:?} row", p.display(), args.subset)))?;
        rows.push((method_name(p), row));
    }
    if !rows.is_empty() {
        let width = rows.iter().map(|(m, _)| m.len()).max().unwrap_or(0).max(6);
        let mut text = format!(
            "{:<width$}  {:>6}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
            "Method", "N", "Accuracy", "WUPS@0.9", "WUPS@0.0", "ACM@0.9", "MCM@0.9", "VQA"
        );
        for (m, r) in &rows {
            let _ = writeln!(
                text,
                "{m:<width$}  {:>6}  {:>8.2}  {:>8.2}  {:>8.2}  {:>8}  {:>8}  {:>8}",
                r.count,
                r.accuracy,
                r.wups_09,
                r.wups_00,
                cell(r.acm_09),
                cell(r.mcm_09),
                cell(r.vqa)
            );
        }
        print!("{text}");
        if let Some(p) = &args.text {
            write_text(p, &text)?;
        }
        if let Some(p) = &args.out {
            let combined: Vec<CombinedRow<'_>> = rows
                .iter()
                .map(|(m, row)| CombinedRow { method: m.clone(), row })
                .collect();
            write_text(p, &serde_json::to_string_pretty(&combined).expect("rows serialize"))?;
        }
    }
    if let Some(svg) = &args.svg {
        let mut series = Vec::new();
        for p in &args.curves {
            series.push((method_name(p), load_log(p)?));
        }
        write_text(svg, &render_curves_svg(&series))?;
    }
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Validation accuracy per epoch, one polyline per log, best epoch marked.
pub fn render_curves_svg(series: &[(String, TrainingLog)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let max_epoch = series
        .iter()
        .flat_map(|(_, l)| l.epochs.iter().map(|e| e.epoch))
        .max()
        .unwrap_or(1)
        .max(2) as f64;
    let x = |e: usize| pad + (e as f64 - 1.0) / (max_epoch - 1.0) * (w - 2.0 * pad);
    let y = |a: f64| h - pad - a * (h - 2.0 * pad);
    let mut s =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/><line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>",
        h - pad,
        w - pad
    );
    for tick in 0..=4 {
        let a = tick as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{:.0}%</text>",
            pad - 6.0,
            y(a) + 4.0,
            a * 100.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">epoch</text>",
        w / 2.0,
        h - 12.0
    );
    for (i, (name, log)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = log
            .epochs
            .iter()
            .filter_map(|e| e.validation_accuracy.map(|a| format!("{:.1},{:.1}", x(e.epoch), y(a))))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            points.join(" ")
        );
        if let Some(best) = log.epochs.iter().find(|e| e.epoch == log.best_epoch) {
            if let Some(a) = best.validation_accuracy {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{color}\"/>",
                    x(best.epoch),
                    y(a)
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>",
            w - pad - 120.0,
            pad + 16.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
