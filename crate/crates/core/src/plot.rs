//! SVG line charts drawn from record CSVs, so figures can be redrawn without
//! re-running any solver.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::eval::median;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Median 3D error per condition (noise level or angle), one line per
    /// variant.
    ErrorVsCondition,
    /// Fraction of instances with 3D error at most x, one line per variant.
    Cumulative,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" | "error-vs-condition" => Ok(PlotKind::ErrorVsCondition),
            "cumulative" | "cdf" => Ok(PlotKind::Cumulative),
            _ => Err(Error::Config(format!("unknown plot kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn line_chart(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().filter(finite).map(|p| p.0)));
    let (y0, y1) = extent(series.iter().flat_map(|s| s.points.iter().filter(finite).map(|p| p.1)));
    let y0 = y0.min(0.0);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, num(LEFT + pw / 2.0), escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(pw),
        num(ph)
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ddd"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"##,
            num(px),
            num(TOP),
            num(TOP + ph),
            num(TOP + ph + 18.0),
            num(xv)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ddd"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"##,
            num(LEFT),
            num(py),
            num(LEFT + pw),
            num(LEFT - 6.0),
            num(py + 4.0),
            num(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(LEFT + pw / 2.0),
        num(H - 18.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        num(TOP + ph / 2.0),
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(finite)
            .map(|&(x, y)| format!("{},{}", num(sx(x)), num(sy(y))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="3"/><text x="{3}" y="{4}">{5}</text>"#,
            num(lx),
            num(ly),
            num(lx + 22.0),
            num(lx + 28.0),
            num(ly + 4.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Per-variant `(condition, error_3d)` pairs from a record CSV, variants in
/// order of first appearance.
pub fn read_errors(csv_text: &str) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse("report", e.to_string()))?
        .clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse("report: line 1", format!("missing column `{name}`")))
    };
    let (cv, cc, ce) = (col("variant")?, col("condition")?, col("error_3d")?);
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(format!("report: line {line}"), e.to_string()))?;
        let parse = |c: usize| {
            rec[c]
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("report: line {line} field `{}`", &header[c]), format!("invalid number `{}`", &rec[c])))
        };
        let point = (parse(cc)?, parse(ce)?);
        match out.iter_mut().find(|(v, _)| v == &rec[cv]) {
            Some((_, pts)) => pts.push(point),
            None => out.push((rec[cv].to_string(), vec![point])),
        }
    }
    Ok(out)
}

pub fn plot_report(csv_text: &str, kind: PlotKind, title: &str, x_label: &str) -> Result<String> {
    let groups = read_errors(csv_text)?;
    let series: Vec<Series> = groups
        .into_iter()
        .map(|(label, pts)| {
            let points = match kind {
                PlotKind::ErrorVsCondition => {
                    let mut by: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
                    for (c, e) in pts {
                        // Order-preserving key for finite floats of either sign.
                        let bits = c.to_bits();
                        let key = if c.is_sign_negative() { !bits } else { bits | (1 << 63) };
                        by.entry(key).or_insert_with(|| (c, Vec::new())).1.push(e);
                    }
                    by.into_values().map(|(c, es)| (c, median(&es))).collect()
                }
                PlotKind::Cumulative => {
                    let mut es: Vec<f64> = pts.into_iter().map(|p| p.1).filter(|e| e.is_finite()).collect();
                    es.sort_by(f64::total_cmp);
                    let n = es.len() as f64;
                    es.iter().enumerate().map(|(i, &e)| (e, (i + 1) as f64 / n)).collect()
                }
            };
            Series { label, points }
        })
        .collect();
    let y_label = match kind {
        PlotKind::ErrorVsCondition => "median 3D error",
        PlotKind::Cumulative => "fraction of instances",
    };
    let x_label = match kind {
        PlotKind::ErrorVsCondition => x_label,
        PlotKind::Cumulative => "3D error",
    };
    Ok(line_chart(&series, title, x_label, y_label))
}
