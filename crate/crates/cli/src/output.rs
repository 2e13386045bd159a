//! CSV and file output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{io_error, CliError, CliResult};

/// Shortest decimal text that parses back to `x`.
pub fn number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn open(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_error(path: Option<&Path>, e: impl std::fmt::Display) -> CliError {
    match path {
        Some(p) => io_error(p, e),
        None => CliError::data(format!("standard output: {e}")),
    }
}

/// Writes a CSV table of numbers.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(open(path)?);
    w.write_record(header).map_err(|e| write_error(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|&v| number(v))).map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}

/// Writes `text` to a file or standard output.
pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    let mut w = open(path)?;
    w.write_all(text.as_bytes()).map_err(|e| write_error(path, e))?;
    w.flush().map_err(|e| write_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::number;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -0.0, 1.0, 1.0 / 3.0, 1e-300, -2.5e-7, 123456.789, 1e20, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x, "{}", number(x));
        }
        assert_eq!(number(0.5), "0.5");
        assert_eq!(number(1e-300), "1e-300");
    }
}
