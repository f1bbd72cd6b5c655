//! Report files: CSV, aligned text tables and per-axis plot series.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::Format;
use crate::error::{Error, Result};

/// A report row with optional sweep coordinates.
pub trait ReportRow: Serialize {
    /// `(axis, value)` for every sweep axis the row varies along.
    fn axes(&self) -> Vec<(&'static str, f64)>;
    /// The plotted quantity.
    fn series_value(&self) -> Option<f64>;
}

pub fn to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

pub fn from_csv<R: DeserializeOwned>(text: &str) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Left-aligned columns, two spaces apart.
pub fn to_table<R: Serialize>(rows: &[R]) -> Result<String> {
    let text = to_csv(rows)?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let cells: Vec<Vec<String>> = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()?;
    let cols = cells.first().map_or(0, Vec::len);
    let widths: Vec<usize> = (0..cols)
        .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

/// `(x, y)` series per sweep axis, sorted by `x`; rows without a value are
/// skipped. Without axes the row index is the abscissa.
pub fn plot_series<R: ReportRow>(rows: &[R]) -> Vec<(&'static str, Vec<(f64, f64)>)> {
    let mut names: Vec<&'static str> = Vec::new();
    for row in rows {
        for (k, _) in row.axes() {
            if !names.contains(&k) {
                names.push(k);
            }
        }
    }
    if names.is_empty() {
        let pts = rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| Some((i as f64, row.series_value()?)))
            .collect();
        return vec![("instance", pts)];
    }
    names
        .into_iter()
        .map(|axis| {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|row| {
                    let x = row.axes().into_iter().find(|(k, _)| *k == axis)?.1;
                    Some((x, row.series_value()?))
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            (axis, pts)
        })
        .collect()
}

/// Writes the rows under `dir` and returns the files written.
pub fn emit_report<R: ReportRow>(
    rows: &[R],
    format: Format,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::input("no rows to report"));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            fs::write(&path, to_csv(rows)?)?;
            written.push(path);
        }
        Format::Table => {
            let path = dir.join(format!("{stem}.txt"));
            fs::write(&path, to_table(rows)?)?;
            written.push(path);
        }
        Format::Plotdata => {
            for (axis, pts) in plot_series(rows) {
                let path = dir.join(format!("{stem}_{axis}.dat"));
                let mut body = format!("# {axis} value\n");
                for (x, y) in pts {
                    body.push_str(&format!("{x} {y}\n"));
                }
                fs::write(&path, body)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
