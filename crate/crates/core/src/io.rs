//! CSV and JSON persistence for samples and estimates.
//!
//! Every CSV has a header row, LF line endings and floats printed with 17
//! significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::LevyDensityEstimate;
use crate::mellin::LaplaceCurve;
use crate::sampling::Sample;

/// Round-trippable float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)
}

/// Writes a numeric table; every row must have one entry per header.
pub fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(headers).map_err(csv_error)?;
    for (k, row) in rows.iter().enumerate() {
        if row.len() != headers.len() {
            return Err(Error::GridMismatch(format!("row {k} has {} fields, expected {}", row.len(), headers.len())));
        }
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a one-column sample file. A non-numeric first row is taken as a
/// header; blank lines are skipped.
pub fn read_sample_csv(path: &Path, spacing: f64) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(csv_error)?;
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(x) => values.push(x),
            Err(_) if line == 0 => {}
            Err(_) => return Err(Error::Parse(format!("line {}: '{field}' is not a number", line + 1))),
        }
    }
    Sample::new(values, spacing, 0)
}

pub fn write_sample_csv(path: &Path, sample: &Sample) -> Result<()> {
    let rows: Vec<Vec<f64>> = sample.values().iter().map(|&x| vec![x]).collect();
    write_csv(path, &["x"], &rows)
}

/// Columns `v, re_Y, im_Y, abs_Y, denom_ratio, ill_flag`.
pub fn write_laplace_curve_csv(path: &Path, curve: &LaplaceCurve) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..curve.len())
        .map(|k| {
            let y = curve.values[k];
            vec![curve.v[k], y.re, y.im, y.norm(), curve.denominator_ratio[k], curve.ill_conditioned[k] as u8 as f64]
        })
        .collect();
    write_csv(path, &["v", "re_Y", "im_Y", "abs_Y", "denom_ratio", "ill_flag"], &rows)
}

/// Columns `x, nu_hat, nu_bar_hat, imag_residual`.
pub fn write_density_csv(path: &Path, estimate: &LevyDensityEstimate) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..estimate.x.len())
        .map(|k| vec![estimate.x[k], estimate.nu_hat[k], estimate.nu_bar_hat[k], estimate.imag_residual[k]])
        .collect();
    write_csv(path, &["x", "nu_hat", "nu_bar_hat", "imag_residual"], &rows)
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
