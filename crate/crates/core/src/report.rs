//! CSV, JSON and SVG output for experiment reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ReportError;
use crate::harness::{mean, sample_std, ExperimentReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// One line of the results CSV: `policy,repetition,regret,reward`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: String,
    pub repetition: usize,
    pub regret: f64,
    pub reward: f64,
}

/// Mean and spread of one policy, as drawn in the whisker chart.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn result_rows(report: &ExperimentReport) -> Vec<ResultRow> {
    report
        .policies
        .iter()
        .flat_map(|p| {
            p.regrets
                .iter()
                .zip(&p.rewards)
                .enumerate()
                .map(|(rep, (&regret, &reward))| ResultRow {
                    policy: p.policy.name().to_string(),
                    repetition: rep,
                    regret,
                    reward,
                })
        })
        .collect()
}

pub fn summaries(report: &ExperimentReport) -> Vec<PolicySummary> {
    report
        .policies
        .iter()
        .map(|p| PolicySummary {
            policy: p.policy.name().to_string(),
            mean: p.mean_regret,
            std: p.std_regret,
            n: p.regrets.len(),
        })
        .collect()
}

/// Groups CSV rows by policy, keeping first-appearance order.
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<PolicySummary> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(name, _)| *name == row.policy) {
            Some((_, v)) => v.push(row.regret),
            None => groups.push((row.policy.clone(), vec![row.regret])),
        }
    }
    groups
        .into_iter()
        .map(|(policy, v)| PolicySummary {
            policy,
            mean: mean(&v),
            std: sample_std(&v),
            n: v.len(),
        })
        .collect()
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => ReportError::io(path, io),
        other => ReportError::format(path, format!("{other:?}")),
    })?;
    reader
        .deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .map_err(|e| ReportError::format(path, e))
}

pub fn read_report_json(path: &Path) -> Result<ExperimentReport, ReportError> {
    let text = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ReportError::format(path, e))
}

pub fn write_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    let body = match format {
        ReportFormat::Csv => csv_string(&result_rows(report)).map_err(|e| ReportError::format(path, e))?,
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| ReportError::format(path, e))?;
            s.push('\n');
            s
        }
        ReportFormat::Svg => render_svg(&summaries(report), "Regret by policy (mean ± std)"),
    };
    fs::write(path, body).map_err(|e| ReportError::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static whisker chart: one horizontal bar at the mean and a whisker spanning
/// one standard deviation either side, per policy.
pub fn render_svg(summaries: &[PolicySummary], title: &str) -> String {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 400.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_max = summaries
        .iter()
        .map(|s| s.mean + s.std)
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.1;
    let y = |v: f64| TOP + plot_h * (1.0 - v.max(0.0) / y_max);
    let slot = plot_w / summaries.len().max(1) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"  <g class="axes" stroke="black"><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/><line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/></g>"#,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"  <text class="tick" x="{}" y="{:.2}" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        out,
        r#"  <text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in summaries.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(30.0);
        let (lo, hi, m) = (y(s.mean - s.std), y(s.mean + s.std), y(s.mean));
        let name = escape(&s.policy);
        let _ = writeln!(out, r#"  <g class="whisker" data-policy="{name}">"#);
        let _ = writeln!(
            out,
            r#"    <line class="spread" x1="{cx:.2}" y1="{hi:.2}" x2="{cx:.2}" y2="{lo:.2}" stroke="gray"/>"#
        );
        for cap in [lo, hi] {
            let _ = writeln!(
                out,
                r#"    <line class="cap" x1="{:.2}" y1="{cap:.2}" x2="{:.2}" y2="{cap:.2}" stroke="gray"/>"#,
                cx - half / 2.0,
                cx + half / 2.0
            );
        }
        let _ = writeln!(
            out,
            r#"    <line class="mean" x1="{:.2}" y1="{m:.2}" x2="{:.2}" y2="{m:.2}" stroke="steelblue" stroke-width="3"/>"#,
            cx - half,
            cx + half
        );
        let _ = writeln!(
            out,
            r#"    <text x="{cx:.2}" y="{:.2}" text-anchor="middle">{name}</text>"#,
            TOP + plot_h + 18.0
        );
        let _ = writeln!(
            out,
            r#"    <text class="value" x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{:.3}</text>"#,
            TOP + plot_h + 34.0,
            s.mean
        );
        let _ = writeln!(out, "  </g>");
    }
    out.push_str("</svg>\n");
    out
}
