//! CSV ingestion with per-coordinate censoring.
//!
//! Every header column is one of
//! * `<name>`: an exact positive observation,
//! * `<name>_lo` and `<name>_hi`: the interval `(lo, hi]`, where an empty or
//!   `inf` upper bound means right-censored at `lo`, an empty lower bound
//!   means zero and `lo = hi` means exact,
//! * the weight column, if one is named.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use iphfit::em::{Observation, Row, Value};

use crate::error::{io_error, CliError, CliResult};

/// Validated sample of `N` rows with `d` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub names: Vec<String>,
    pub rows: Vec<Row>,
}

impl DataTable {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// The observations of coordinate `j`.
    pub fn column(&self, j: usize) -> Vec<Observation> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Exact values of coordinate `j`, in row order.
    pub fn exact_values(&self, j: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| match r[j].value() {
                Value::Exact(y) => Some(y),
                _ => None,
            })
            .collect()
    }
}

enum Source {
    Exact(usize),
    Interval(usize, usize),
}

struct Layout {
    names: Vec<String>,
    sources: Vec<Source>,
    weight: Option<usize>,
}

fn layout(header: &csv::StringRecord, weight: Option<&str>) -> CliResult<Layout> {
    let columns: Vec<&str> = header.iter().collect();
    let mut index = HashMap::new();
    for (i, c) in columns.iter().enumerate() {
        if c.is_empty() {
            return Err(CliError::data(format!("header column {} is empty", i + 1)));
        }
        if index.insert(*c, i).is_some() {
            return Err(CliError::data(format!("header column '{c}' appears twice")));
        }
    }
    let weight_index = match weight {
        Some(w) => Some(
            *index
                .get(w)
                .ok_or_else(|| CliError::data(format!("weight column '{w}' is not in the header")))?,
        ),
        None => None,
    };
    let mut names = Vec::new();
    let mut sources = Vec::new();
    for (i, c) in columns.iter().enumerate() {
        if Some(i) == weight_index {
            continue;
        }
        if let Some(name) = c.strip_suffix("_lo") {
            let hi = index
                .get(format!("{name}_hi").as_str())
                .ok_or_else(|| CliError::data(format!("column '{c}' has no matching '{name}_hi'")))?;
            names.push(name.to_string());
            sources.push(Source::Interval(i, *hi));
        } else if let Some(name) = c.strip_suffix("_hi") {
            if !index.contains_key(format!("{name}_lo").as_str()) {
                return Err(CliError::data(format!("column '{c}' has no matching '{name}_lo'")));
            }
        } else {
            names.push(c.to_string());
            sources.push(Source::Exact(i));
        }
    }
    if names.is_empty() {
        return Err(CliError::data("the header names no observation columns"));
    }
    Ok(Layout {
        names,
        sources,
        weight: weight_index,
    })
}

fn is_infinite(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "inf" | "+inf" | "infinity" | "+infinity")
}

fn number(s: &str, row: usize, column: &str) -> CliResult<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(cell_error(row, column, format!("'{s}' is not a finite number"))),
    }
}

fn cell_error(row: usize, column: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::data(format!("row {row}, column '{column}': {msg}"))
}

fn exact(v: f64, row: usize, column: &str) -> CliResult<Observation> {
    if v <= 0.0 {
        return Err(cell_error(row, column, format!("exact value {v} must be positive")));
    }
    Observation::exact(v).map_err(|e| cell_error(row, column, e))
}

fn observation(record: &csv::StringRecord, source: &Source, header: &csv::StringRecord, row: usize) -> CliResult<Observation> {
    match *source {
        Source::Exact(i) => {
            let col = &header[i];
            let cell = &record[i];
            if cell.is_empty() {
                return Err(cell_error(row, col, "missing value"));
            }
            exact(number(cell, row, col)?, row, col)
        }
        Source::Interval(i, j) => {
            let (lo_col, hi_col) = (&header[i], &header[j]);
            let lo = if record[i].is_empty() { 0.0 } else { number(&record[i], row, lo_col)? };
            if lo < 0.0 {
                return Err(cell_error(row, lo_col, format!("lower bound {lo} is negative")));
            }
            let hi_cell = &record[j];
            if hi_cell.is_empty() || is_infinite(hi_cell) {
                return Observation::right_censored(lo).map_err(|e| cell_error(row, lo_col, e));
            }
            let hi = number(hi_cell, row, hi_col)?;
            if lo > hi {
                return Err(cell_error(row, hi_col, format!("upper bound {hi} is below the lower bound {lo}")));
            }
            if lo == hi {
                return exact(lo, row, lo_col);
            }
            Observation::interval(lo, hi).map_err(|e| cell_error(row, hi_col, e))
        }
    }
}

/// Reads a sample from CSV text.
pub fn ingest_reader<R: Read>(input: R, weight: Option<&str>) -> CliResult<DataTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| CliError::data(format!("cannot read the header: {e}")))?
        .clone();
    if header.is_empty() {
        return Err(CliError::data("the file is empty"));
    }
    let layout = layout(&header, weight)?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CliError::data(format!("row {row}: {e}")))?;
        let mut obs = Vec::with_capacity(layout.sources.len());
        for source in &layout.sources {
            obs.push(observation(&record, source, &header, row)?);
        }
        if let Some(w) = layout.weight {
            let col = &header[w];
            let v = number(&record[w], row, col)?;
            for o in obs.iter_mut() {
                *o = o.with_weight(v).map_err(|e| cell_error(row, col, e))?;
            }
        }
        rows.push(obs);
    }
    if rows.is_empty() {
        return Err(CliError::data("the file has a header but no rows"));
    }
    Ok(DataTable {
        names: layout.names,
        rows,
    })
}

/// Reads a sample from a CSV file.
pub fn ingest(path: &Path, weight: Option<&str>) -> CliResult<DataTable> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    ingest_reader(file, weight).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
