use std::fs;
use std::path::{Path, PathBuf};

use ega_core::Dataset;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CliError, Result};

/// A parsed input file: item names from the header plus the data.
pub struct Table {
    pub names: Vec<String>,
    pub data: Dataset,
}

pub fn read_dataset(path: &Path) -> Result<Table> {
    let bytes = fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let csv_err = |row: usize, column: String, message: String| CliError::Csv {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(1, "-".into(), e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(csv_err(1, "-".into(), "missing header row".into()));
    }
    let p = names.len();
    let mut values = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |pos| pos.line() as usize);
            csv_err(row, "-".into(), e.to_string())
        })?;
        let row = record.position().map_or(n + 2, |pos| pos.line() as usize);
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| csv_err(row, names[j].clone(), format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(csv_err(row, names[j].clone(), format!("`{cell}` is not finite")));
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let data = Dataset::detect(DMatrix::from_row_slice(n, p, &values))?;
    Ok(Table { names, data })
}

/// Serializes `value` as pretty JSON to `path`, or stdout when `None`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Shortest representation that reads back to the same value.
pub fn exact(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Six decimals; empty for missing or non-finite values.
pub fn fixed(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        _ => String::new(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}
