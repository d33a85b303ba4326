//! Numeric CSV ingestion.
//!
//! Comma separated, one record per line. An optional label column
//! is split off into the dataset's labels. Integer labels are kept as-is;
//! anything else is numbered by first appearance.

use std::collections::HashMap;
use std::path::Path;

use quickshift_core::Dataset;

use crate::error::{CliError, Result};

pub fn load_csv(path: &Path, has_header: bool, label_column: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text, has_header, label_column, &path.display().to_string())
}

pub fn parse_csv(text: &str, has_header: bool, label_column: Option<usize>, source: &str) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width: Option<usize> = None;
    let mut features: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    parse_err(line, format!("expected {expected_len} fields, found {len}"))
                }
                _ => parse_err(line, e.to_string()),
            }
        })?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if width.is_none() {
            if let Some(col) = label_column {
                if col >= record.len() {
                    return Err(parse_err(
                        line_no,
                        format!("label column {col} out of range for {} columns", record.len()),
                    ));
                }
                if record.len() == 1 {
                    return Err(parse_err(line_no, "no feature columns left besides the label".into()));
                }
            }
            width = Some(record.len());
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_column {
                raw_labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("column {c}: `{cell}` is not a number")))?;
            if !value.is_finite() {
                return Err(parse_err(line_no, format!("column {c}: non-finite value `{cell}`")));
            }
            features.push(value);
        }
    }

    let width = width.ok_or_else(|| CliError::Input {
        path: source.to_string(),
        message: "no data rows".into(),
    })?;
    let dim = width - usize::from(label_column.is_some());
    let data = Dataset::from_flat(features, dim)?;
    if label_column.is_none() {
        return Ok(data);
    }
    Ok(data.with_labels(encode_labels(&raw_labels))?)
}

fn encode_labels(raw: &[String]) -> Vec<i64> {
    if let Ok(ints) = raw.iter().map(|s| s.parse::<i64>()).collect::<Result<Vec<_>, _>>() {
        return ints;
    }
    let mut ids: HashMap<&str, i64> = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = ids.len() as i64;
            *ids.entry(s.as_str()).or_insert(next)
        })
        .collect()
}
