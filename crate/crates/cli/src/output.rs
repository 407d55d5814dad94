//! CSV and SVG writers.
//!
//! CSV files open with `# key=value` comment lines describing the run,
//! followed by a fixed header and one line per row. Floats use C-style
//! `%.10e` formatting, missing values are empty fields, lines end in LF.
//! Nothing depending on wall-clock time or thread count is written, so
//! identical rows always give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::sweep::{MeanCountRow, SweepRow};

pub const SWEEP_HEADER: &str = "snr_db,strategy,k,p_analytic,p_mc,stderr_mc,trials,error";
pub const MEAN_COUNT_HEADER: &str =
    "observer,radius,analytic,empirical,stderr_empirical,trials,error";

/// Formats like C's `%.10e`: ten fractional digits, signed exponent of at
/// least two digits.
pub fn fmt_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{x:.10e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.unsigned_abs())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sci).unwrap_or_default()
}

/// Keeps free text inside one CSV field.
fn sanitize(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' | '"' => ' ',
            c => c,
        })
        .collect()
}

pub trait CsvRow {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for SweepRow {
    const HEADER: &'static str = SWEEP_HEADER;
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_sci(self.snr_db),
            self.strategy.as_str().to_string(),
            self.k.to_string(),
            opt(self.p_analytic),
            opt(self.p_mc),
            opt(self.stderr_mc),
            self.trials.to_string(),
            self.error.as_deref().map(sanitize).unwrap_or_default(),
        ]
    }
}

impl CsvRow for MeanCountRow {
    const HEADER: &'static str = MEAN_COUNT_HEADER;
    fn fields(&self) -> Vec<String> {
        vec![
            self.observer.as_str().to_string(),
            fmt_sci(self.radius),
            opt(self.analytic),
            opt(self.empirical),
            opt(self.stderr_empirical),
            self.trials.to_string(),
            self.error.as_deref().map(sanitize).unwrap_or_default(),
        ]
    }
}

/// Renders comment lines, header and rows.
pub fn render_table(metadata: &[(&str, String)], header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (key, value) in metadata {
        let _ = writeln!(out, "# {key}={}", sanitize(value));
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn render_csv<R: CsvRow>(rows: &[R], metadata: &[(&str, String)]) -> String {
    let lines: Vec<Vec<String>> = rows.iter().map(CsvRow::fields).collect();
    render_table(metadata, R::HEADER, &lines)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `rows` to `path`. Refuses, without touching the file system,
/// when there are no rows.
pub fn write_csv<R: CsvRow>(rows: &[R], metadata: &[(&str, String)], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(CliError::EmptyRows(path.to_path_buf()));
    }
    write_file(path, &render_csv(rows, metadata))
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Log-y chart of outage against SNR: one line per (strategy, k) for the
/// analytic values and markers for the Monte Carlo estimates.
pub fn render_svg(rows: &[SweepRow]) -> String {
    let mut series: Vec<(String, Vec<&SweepRow>)> = Vec::new();
    for row in rows {
        let label = format!("{} k={}", row.strategy, row.k);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, members)) => members.push(row),
            None => series.push((label, vec![row])),
        }
    }

    let positive = rows
        .iter()
        .flat_map(|r| [r.p_analytic, r.p_mc])
        .flatten()
        .filter(|p| *p > 0.0);
    let min_p = positive.fold(1.0f64, f64::min);
    let y_lo = min_p.log10().floor().clamp(-12.0, -1.0);
    let x_lo = rows.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let x_hi = rows
        .iter()
        .map(|r| r.snr_db)
        .fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };

    let px = |snr: f64| MARGIN + (snr - x_lo) / x_span * (WIDTH - 2.0 * MARGIN);
    let py = |p: f64| {
        let t = (p.log10().max(y_lo) - y_lo) / -y_lo;
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g stroke="black" fill="none"><line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}"/></g>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
    );
    let mut decade = y_lo as i32;
    while decade <= 0 {
        let y = py(10f64.powi(decade));
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#dddddd"/><text x="{tx}" y="{ty:.2}" font-size="11" text-anchor="end">1e{decade}</text>"##,
            r = WIDTH - MARGIN,
            tx = MARGIN - 6.0,
            ty = y + 4.0,
        );
        decade += 1;
    }
    let mut snrs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    snrs.dedup();
    for snr in snrs {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y}" font-size="11" text-anchor="middle">{snr}</text>"#,
            x = px(snr),
            y = HEIGHT - MARGIN + 16.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">SNR (dB)</text>"#,
        x = WIDTH / 2.0,
        y = HEIGHT - 18.0,
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {y})">outage probability</text>"#,
        y = HEIGHT / 2.0,
    );

    for (i, (label, members)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = members
            .iter()
            .filter_map(|r| r.p_analytic.filter(|p| *p > 0.0).map(|p| (r.snr_db, p)))
            .map(|(s, p)| format!("{:.2},{:.2}", px(s), py(p)))
            .collect();
        if !points.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points.join(" ")
            );
        }
        for r in members {
            if let Some(p) = r.p_mc.filter(|p| *p > 0.0) {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}"/>"#,
                    px(r.snr_db),
                    py(p)
                );
            }
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{ly}" font-size="11" fill="{color}" text-anchor="end">{label}</text>"#,
            x = WIDTH - MARGIN - 4.0,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(CliError::EmptyRows(path.to_path_buf()));
    }
    write_file(path, &render_svg(rows))
}
