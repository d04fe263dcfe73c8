//! Artifact writers: RFC-4180 CSV tables and pretty JSON reports.

use rfkac::error::{Error, Result};
use std::path::Path;

fn err(e: impl std::fmt::Display) -> Error {
    Error::Precondition(format!("artifact write failed: {e}"))
}

/// Write a CSV file with a header row and one record per row; fields are
/// formatted with the shortest round-trip float representation.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(err)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(err)?;
    std::fs::write(path, text).map_err(err)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
