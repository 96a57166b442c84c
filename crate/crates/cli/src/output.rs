//! Deterministic CSV and SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{CliError, CliResult};

/// Twelve significant digits in scientific notation; `-0` prints as `0`.
pub fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// CSV table with a units comment line above the header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(units: &str, columns: &[&str]) -> Self {
        Csv {
            text: format!("# units: {units}\n{}\n", columns.join(",")),
            columns: columns.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&fmt_float(*v)),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub enum Cell {
    Int(u64),
    Float(f64),
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <title>{}</title>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Black dots on white, `x` mapped from `x_range` and `y` from `y_range`
/// (upwards). One `<circle>` per point.
pub fn scatter_svg(points: &[(f64, f64)], x_range: (f64, f64), y_range: (f64, f64), title: &str) -> String {
    let (w, h, pad) = (800.0, 800.0, 40.0);
    let mut s = svg_open(w, h, title);
    writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        s,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    )
    .unwrap();
    s.push_str("<g fill=\"black\">\n");
    for &(x, y) in points {
        let px = pad + (x - x_range.0) / (x_range.1 - x_range.0) * (w - 2.0 * pad);
        let py = h - pad - (y - y_range.0) / (y_range.1 - y_range.0) * (h - 2.0 * pad);
        writeln!(s, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"0.8\"/>").unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Grayscale raster, `values[row][col]` mapped linearly from `range` to
/// black..white, row 0 at the top. One `<rect>` per cell.
pub fn heatmap_svg(values: &[Vec<f64>], range: (f64, f64), cell: f64, title: &str) -> String {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let (w, h) = (cols as f64 * cell, rows as f64 * cell);
    let mut s = svg_open(w, h, title);
    let span = range.1 - range.0;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let t = if span > 0.0 { ((v - range.0) / span).clamp(0.0, 1.0) } else { 0.0 };
            let g = (t * 255.0).round() as u8;
            writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"#{g:02x}{g:02x}{g:02x}\"/>",
                j as f64 * cell,
                i as f64 * cell
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
