//! Plot-ready series from trace or aggregate CSVs, with an optional SVG
//! rendering.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub y_scale: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Reads a unified trace (one series per algorithm, problem and seed) or an
/// aggregate file (one series per algorithm and problem). Returns `None` for
/// a trace without data rows.
pub fn plot_data(csv_text: &str, log_y: bool) -> Result<Option<PlotData>, HarnessError> {
    if csv_text.trim().is_empty() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(algo), Some(problem), Some(iter)) = (col("algorithm"), col("problem"), col("iteration")) else {
        return Err(HarnessError::Solver(
            "plot input needs algorithm, problem and iteration columns".into(),
        ));
    };
    let seed = col("seed");
    let Some(value) = col("best_fitness").or_else(|| col("mean_best_fitness")) else {
        return Err(HarnessError::Solver("plot input has no fitness column".into()));
    };

    let mut series: BTreeMap<(String, String, Option<u64>), Vec<(u32, f64)>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |what: &str| HarnessError::Solver(format!("row {}: bad {what}", line + 2));
        let it: u32 = field(iter).parse().map_err(|_| bad("iteration"))?;
        let y: f64 = field(value).parse().map_err(|_| bad("fitness"))?;
        let s = match seed {
            Some(i) => Some(field(i).parse().map_err(|_| bad("seed"))?),
            None => None,
        };
        series
            .entry((field(algo).to_string(), field(problem).to_string(), s))
            .or_default()
            .push((it, y));
    }
    if series.is_empty() {
        return Ok(None);
    }
    Ok(Some(PlotData {
        y_scale: if log_y { "log" } else { "linear" }.into(),
        x_label: "iteration".into(),
        y_label: if seed.is_some() { "best fitness" } else { "mean best fitness" }.into(),
        series: series
            .into_iter()
            .map(|((a, p, s), mut points)| {
                points.sort_by_key(|&(x, _)| x);
                let label = match s {
                    Some(s) => format!("{a} {p} seed {s}"),
                    None => format!("{a} {p}"),
                };
                Series { label, points }
            })
            .collect(),
    }))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
/// Smallest value drawn on a log axis.
const LOG_FLOOR: f64 = 1e-4;

/// Standalone SVG line chart.
pub fn render_svg(data: &PlotData) -> String {
    let (w, h, m) = (720.0, 420.0, 50.0);
    let log = data.y_scale == "log";
    let ty = |y: f64| if log { y.max(LOG_FLOOR).log10() } else { y };
    let points = data.series.iter().flat_map(|s| s.points.iter());
    let x_max = points.clone().map(|p| p.0).max().unwrap_or(1).max(1) as f64;
    let (mut y_lo, mut y_hi): (f64, f64) = if log { (ty(LOG_FLOOR), 0.0) } else { (0.0, 1.0) };
    for &(_, y) in points {
        y_lo = y_lo.min(ty(y));
        y_hi = y_hi.max(ty(y));
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let px = |x: f64| m + (x - 1.0).max(0.0) / (x_max - 1.0).max(1.0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (ty(y) - y_lo) / (y_hi - y_lo) * (h - 2.0 * m);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        w / 2.0,
        h - 12.0,
        data.x_label
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{}{}</text>"#,
        h / 2.0,
        h / 2.0,
        data.y_label,
        if log { " (log)" } else { "" }
    );
    for (i, s) in data.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x as f64), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            m + 8.0,
            m + 14.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
