//! Delimited text input and output.
//!
//! Inputs carry a header row and are comma or tab separated; the delimiter
//! is detected from the header line. Reported row numbers are file line
//! numbers, so the first data row is row 2.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use coxph_susie::{DesignMatrix, SurvivalOutcome};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    pub fn into_matrix(self) -> Result<DesignMatrix> {
        Ok(DesignMatrix::from_columns(self.columns)?)
    }
}

pub fn detect_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Format { path: path.to_path_buf(), message: message.into() }
}

pub fn parse_numeric(path: &Path, text: &str) -> Result<NumericTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format_error(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(format_error(path, "missing header row"));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record.map_err(|e| format_error(path, e.to_string()))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                row,
                column: header[k].clone(),
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: header[k].clone(),
                    message: format!("'{field}' is not finite"),
                });
            }
            columns[k].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(format_error(path, "no data rows"));
    }
    Ok(NumericTable { header, columns })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_numeric(path: &Path) -> Result<NumericTable> {
    parse_numeric(path, &read_to_string(path)?)
}

/// Reads the `time` and `status` columns; other columns are ignored.
pub fn read_phenotypes(path: &Path) -> Result<SurvivalOutcome> {
    let table = read_numeric(path)?;
    let find = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| format_error(path, format!("no '{name}' column in header")))
    };
    let (ti, si) = (find("time")?, find("status")?);
    let bad = |row: usize, column: &str, message: String| CliError::Parse {
        path: path.to_path_buf(),
        row: row + 2,
        column: column.to_string(),
        message,
    };
    let times = table.columns[ti].clone();
    if let Some(i) = times.iter().position(|&t| t < 0.0) {
        return Err(bad(i, "time", format!("negative time {}", times[i])));
    }
    let status = table.columns[si]
        .iter()
        .enumerate()
        .map(|(i, &s)| match s {
            0.0 => Ok(false),
            1.0 => Ok(true),
            _ => Err(bad(i, "status", format!("status {s} is not 0 or 1"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(SurvivalOutcome::new(times, status)?)
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header).map_err(|e| csv_io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_matrix(path: &Path, header: &[String], x: &DesignMatrix) -> Result<()> {
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x.get(i, j).to_string()).collect())
        .collect();
    write_table(path, &header, &rows)
}

pub fn write_phenotypes(path: &Path, outcome: &SurvivalOutcome) -> Result<()> {
    let rows: Vec<Vec<String>> = outcome
        .times()
        .iter()
        .zip(outcome.status())
        .map(|(t, &d)| vec![t.to_string(), u8::from(d).to_string()])
        .collect();
    write_table(path, &["time", "status"], &rows)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| format_error(path, e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}
