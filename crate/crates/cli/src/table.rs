//! Delimited numeric tables: rows are time points, columns are components.

use std::io::{Read, Write};

use mvcapa::SeriesMatrix;

use crate::CliError;

/// Tab if the first non-empty line has one, otherwise comma.
fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Parse a rectangular table. A first row that is not entirely numeric is
/// taken as a header and returned separately.
pub fn parse(text: &str) -> Result<(Option<Vec<String>>, SeriesMatrix), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => {
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(CliError::Parse(format!(
                        "line {line}: non-finite value {bad}"
                    )));
                }
                if let Some(first) = rows.first() {
                    if first.len() != values.len() {
                        return Err(CliError::Parse(format!(
                            "line {line}: expected {} columns, found {}",
                            first.len(),
                            values.len()
                        )));
                    }
                }
                rows.push(values);
            }
            Err(_) if rows.is_empty() && header.is_none() => {
                header = Some(record.iter().map(str::to_owned).collect());
            }
            Err(e) => return Err(CliError::Parse(format!("line {line}: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Parse("no numeric rows".into()));
    }
    if let Some(h) = &header {
        let h: &Vec<String> = h;
        if h.len() != rows[0].len() {
            return Err(CliError::Parse(format!(
                "header has {} columns, data has {}",
                h.len(),
                rows[0].len()
            )));
        }
    }
    Ok((header, SeriesMatrix::from_rows(&rows)?))
}

pub fn read(path: &str) -> Result<(Option<Vec<String>>, SeriesMatrix), CliError> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    }
    parse(&text)
}

/// Comma-separated with a `x0,x1,...` header; values use the shortest
/// representation that parses back to the same number.
pub fn write<W: Write>(out: W, x: &SeriesMatrix) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..x.p()).map(|i| format!("x{i}")))?;
    for row in x.rows() {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
