//! Method comparison, the text table, and ROC export.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LabelSource, Method, PipelineConfig};
use super::run::{run_experiment, ExperimentReport};
use crate::dataset::Session;
use crate::error::{Error, Result};
use crate::models::RocPoint;

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub method: Method,
    pub label_source: LabelSource,
    pub split: String,
    pub auc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub warnings: Vec<String>,
    pub reports: Vec<ExperimentReport>,
}

impl ComparisonReport {
    pub fn without_timestamps(&self) -> ComparisonReport {
        ComparisonReport {
            rows: self.rows.clone(),
            warnings: self.warnings.clone(),
            reports: self.reports.iter().map(ExperimentReport::without_timestamps).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn table(&self) -> String {
        render_table(&self.rows)
    }
}

/// Differences between configs that make their rows hard to compare.
pub fn comparison_warnings(configs: &[PipelineConfig]) -> Vec<String> {
    let mut out = Vec::new();
    let first = &configs[0];
    let differs = |f: &dyn Fn(&PipelineConfig) -> String| configs.iter().any(|c| f(c) != f(first));
    if differs(&|c| format!("{:?}", c.label_source)) {
        out.push("configs use different label sources; rows are not measured against the same ground truth".into());
    }
    if differs(&|c| c.split.describe()) || differs(&|c| format!("{}", c.grouped_split)) {
        out.push("configs use different splits; fold assignments differ between rows".into());
    }
    if differs(&|c| c.seed.to_string()) {
        out.push("configs use different seeds; fold assignments differ between rows".into());
    }
    if differs(&|c| format!("{:?}", c.window)) {
        out.push("configs use different windows; example sets differ between rows".into());
    }
    if differs(&|c| format!("{:?}", c.eval_target)) {
        out.push("configs evaluate on different folds".into());
    }
    out
}

/// Runs every config on the same sessions, in parallel, and tabulates AUC,
/// accuracy, precision and recall per config.
pub fn compare(configs: &[PipelineConfig], sessions: &[Session]) -> Result<ComparisonReport> {
    if configs.len() < 2 {
        return Err(Error::Config("compare needs at least two configs".into()));
    }
    for c in configs {
        c.validate()?;
    }
    let reports = configs
        .par_iter()
        .map(|c| run_experiment(c, sessions))
        .collect::<Result<Vec<_>>>()?;
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            method: r.config.method,
            label_source: r.config.label_source,
            split: r.config.split.describe(),
            auc: r.metrics.auc,
            accuracy: r.metrics.accuracy,
            precision: r.metrics.precision,
            recall: r.metrics.recall,
        })
        .collect();
    Ok(ComparisonReport {
        rows,
        warnings: comparison_warnings(configs),
        reports,
    })
}

pub fn render_table(rows: &[ComparisonRow]) -> String {
    let header = [
        "Method",
        "Labels",
        "Split",
        "AUC",
        "Accuracy (%)",
        "Precision (%)",
        "Recall (%)",
    ];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                format!("{:?}", r.label_source).to_lowercase(),
                r.split.clone(),
                format!("{:.3}", r.auc),
                format!("{:.2}", r.accuracy),
                format!("{:.2}", r.precision),
                format!("{:.2}", r.recall),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i < 3 {
                    format!("{:<w$}", c, w = widths[i])
                } else {
                    format!("{:>w$}", c, w = widths[i])
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in &cells {
        line(&mut out, row);
    }
    out
}

/// ROC points as CSV with header `fpr,tpr,threshold`. Values use the
/// shortest representation that parses back to the same number.
pub fn write_roc_csv<W: Write>(out: W, points: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<roc csv>", e))?;
    Ok(())
}

pub fn read_roc_csv<R: std::io::Read>(input: R) -> Result<Vec<RocPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Self-contained SVG plot of one ROC curve per named series.
pub fn roc_svg(series: &[(String, Vec<RocPoint>)]) -> String {
    let (size, pad) = (480.0, 56.0);
    let plot = size - 2.0 * pad;
    let x = |v: f64| pad + v * plot;
    let y = |v: f64| size - pad - v * plot;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{yy}" x2="{x1}" y2="{yy}" stroke="#e0e0e0"/><line x1="{xx}" y1="{y0}" x2="{xx}" y2="{y1}" stroke="#e0e0e0"/>"##,
            x0 = x(0.0),
            x1 = x(1.0),
            yy = y(v),
            xx = x(v),
            y0 = y(0.0),
            y1 = y(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx}" y="{ty}" text-anchor="middle">{v:.1}</text><text x="{lx}" y="{ly}" text-anchor="end">{v:.1}</text>"#,
            tx = x(v),
            ty = y(0.0) + 16.0,
            lx = x(0.0) - 6.0,
            ly = y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{plot}" height="{plot}" fill="none" stroke="#333"/>"##,
        x(0.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        size / 2.0,
        size - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">True positive rate</text>"#,
        size / 2.0,
        size / 2.0
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        let ly = y(0.0) - 12.0 - 18.0 * (series.len() - 1 - i) as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x(0.55),
            x(0.62),
            x(0.64),
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
