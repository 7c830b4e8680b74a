//! Report envelopes, text tables and SVG line charts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricReport;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Identifies the run that produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub schema: u32,
}

impl RunStamp {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        RunStamp {
            config_hash: config_hash.into(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            schema: REPORT_SCHEMA_VERSION,
        }
    }

    pub fn csv_fields(&self) -> Vec<(String, String)> {
        vec![
            ("config_hash".into(), self.config_hash.clone()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

/// A report body with its run stamp alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub run: RunStamp,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub station: String,
    pub family: String,
    pub test_rows: usize,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub rows: Vec<EvaluationRow>,
}

impl EvaluationTable {
    pub fn stations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.station) {
                out.push(r.station.clone());
            }
        }
        out
    }

    pub fn families(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.family) {
                out.push(r.family.clone());
            }
        }
        out
    }

    pub fn get(&self, station: &str, family: &str) -> Option<&MetricReport> {
        self.rows
            .iter()
            .find(|r| r.station == station && r.family == family)
            .map(|r| &r.metrics)
    }

    /// Station-by-family grid of one metric as percentages.
    pub fn render(&self, title: &str, pick: impl Fn(&MetricReport) -> f64) -> String {
        let families = self.families();
        let mut s = format!("{title}\n{:<16}", "station");
        for f in &families {
            let _ = write!(s, "{f:>9}");
        }
        s.push('\n');
        for st in self.stations() {
            let _ = write!(s, "{st:<16}");
            for f in &families {
                match self.get(&st, f) {
                    Some(m) => {
                        let _ = write!(s, "{:>9.2}", 100.0 * pick(m));
                    }
                    None => {
                        let _ = write!(s, "{:>9}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Rounds an axis span outward to a step from {1, 2, 5}×10ᵏ.
fn nice_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

/// Line chart with one polyline per series, tick marks at every x value
/// present in the data, and a legend on the right.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (760.0, 440.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let mut xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let (x0, x1) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0));
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
    let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1, ystep) = if ys.is_empty() { (0.0, 1.0, 0.2) } else { nice_range(y_min, y_max) };

    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );

    for &x in &xs {
        let tx = px(x);
        let _ = writeln!(s, r#"<line x1="{tx:.1}" y1="{}" x2="{tx:.1}" y2="{}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{tx:.1}" y="{}" text-anchor="middle">{x}</text>"#, top + ph + 19.0);
    }
    let mut y = y0;
    while y <= y1 + ystep * 1e-6 {
        let ty = py(y);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{ty:.1}" x2="{}" y2="{ty:.1}" stroke="#dddddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.2}</text>"#, left - 6.0, ty + 4.0, y);
        y += ystep;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
