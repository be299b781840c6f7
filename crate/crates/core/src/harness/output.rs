use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::quadrature::QuadratureNode;
use super::{ConvergenceTable, HarnessError, ResultRow};

pub const ROW_HEADER: [&str; 9] = ["n", "x", "a", "b", "ratio_re", "ratio_im", "target", "abs_err", "level"];
pub const TABLE_HEADER: [&str; 2] = ["n", "max_abs_err"];
pub const THRESHOLD_HEADER: [&str; 2] = ["epsilon", "n_threshold"];
pub const QUADRATURE_HEADER: [&str; 2] = ["node", "weight"];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|e| HarnessError::csv(path, e))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn emit_rows(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(ROW_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.x),
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_f64(r.ratio.re),
            fmt_f64(r.ratio.im),
            fmt_f64(r.target),
            fmt_f64(r.abs_err),
            r.level.to_string(),
        ])
        .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    let parse_err = |what: &str| HarnessError::Parse(format!("{}: bad {what}", path.display()));
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| HarnessError::csv(path, e))?;
        let f = |i: usize| -> Result<f64, HarnessError> {
            rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ROW_HEADER[i]))
        };
        let n = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("n"))?;
        let level = rec.get(8).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("level"))?;
        let abs_err = f(7)?;
        rows.push(ResultRow {
            n,
            x: f(1)?,
            a: f(2)?,
            b: f(3)?,
            ratio: Complex64::new(f(4)?, f(5)?),
            target: f(6)?,
            abs_err,
            level,
            error: abs_err.is_nan().then(|| "invalid query".to_string()),
        });
    }
    Ok(rows)
}

pub fn emit_table(table: &ConvergenceTable, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(TABLE_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for &(n, err) in &table.rows {
        w.write_record([n.to_string(), fmt_f64(err)])
            .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

/// `epsilon,n_threshold`, with an empty field where no order reaches `ε`.
pub fn emit_thresholds(table: &ConvergenceTable, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(THRESHOLD_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for &(eps, n) in &table.thresholds {
        w.write_record([fmt_f64(eps), n.map(|n| n.to_string()).unwrap_or_default()])
            .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn emit_quadrature(nodes: &[QuadratureNode], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(QUADRATURE_HEADER).map_err(|e| HarnessError::csv(path, e))?;
    for q in nodes {
        w.write_record([fmt_f64(q.node), fmt_f64(q.weight)])
            .map_err(|e| HarnessError::csv(path, e))?;
    }
    finish(w, path)
}

/// Log-log line plot of `(n, max error)` as a standalone SVG document.
pub fn render_plot(table: &ConvergenceTable, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 60.0;
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|(n, e)| *n > 0 && *e > 0.0 && e.is_finite())
        .map(|&(n, e)| ((n as f64).log10(), e.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    if !pts.is_empty() {
        let (x0, x1) = span(pts.iter().map(|p| p.0));
        let (y0, y1) = span(pts.iter().map(|p| p.1));
        let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let _ = writeln!(
            svg,
            r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" fill="none" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        );
        let path: Vec<String> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">log10 n ({x0:.2} to {x1:.2})</text>"#,
            W / 2.0,
            H - 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">log10 max error ({y0:.2} to {y1:.2})</text>"#,
            H / 2.0,
            H / 2.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot(table: &ConvergenceTable, title: &str, path: &Path) -> Result<(), HarnessError> {
    write_text(path, &render_plot(table, title))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    let mut f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))
}
