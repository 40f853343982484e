use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Writes a header row and data rows.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(header, rows)` of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

/// One numeric column, by header name.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let (header, rows) = read_table(path)?;
    let col = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Format(format!("{}: no column {name:?}", path.display())))?;
    rows.iter()
        .map(|r| {
            r[col]
                .parse()
                .map_err(|e| Error::Format(format!("{}: column {name}: {e}", path.display())))
        })
        .collect()
}

pub fn diagnostics_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "mass".to_string()];
    h.extend((1..=dim).map(|a| format!("p{a}")));
    h.extend((1..=dim).map(|a| format!("ubar{a}")));
    for c in [
        "amplitude",
        "rho_min",
        "rho_max",
        "e_inf",
        "e_lip",
        "u_c1",
        "u_c2",
        "u_c2g",
        "flock_dist_inf",
        "flock_dist_c1",
    ] {
        h.push(c.to_string());
    }
    h
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> Vec<String> {
    let mut row = vec![r.t, r.mass];
    row.extend(&r.momentum);
    row.extend(&r.mean_velocity);
    row.extend([
        r.amplitude,
        r.rho_min,
        r.rho_max,
        r.e_inf,
        r.e_lip,
        r.u_c1,
        r.u_c2,
        r.u_c2g,
        r.flock_dist_inf,
        r.flock_dist_c1,
    ]);
    row.into_iter().map(fmt_f64).collect()
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let dim = records.first().map_or(1, |r| r.momentum.len());
    let rows: Vec<Vec<String>> = records.iter().map(diagnostics_row).collect();
    write_table(path, &diagnostics_header(dim), &rows)
}

/// `(t, column)` pairs from a diagnostics file.
pub fn read_diagnostics_series(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let t = read_column(path, "t")?;
    let v = read_column(path, column)?;
    Ok(t.into_iter().zip(v).collect())
}
