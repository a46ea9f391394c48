//! Plain-text lifetime samples.

use crate::error::{Error, Result};

const MECHANICAL: &str = include_str!("../data/mechanical_components.txt");

/// Parses one positive value per line. Blank lines and `#` comments are
/// skipped, and a single non-numeric first line is taken as a CSV header.
pub fn parse_dataset(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let field = line.trim_end_matches(',').trim().trim_matches('"').trim();
        if field.contains(',') {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected a single column, found {line:?}"),
            });
        }
        match field.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("value {v} is not a positive finite number"),
                })
            }
            Err(_) if !seen_content => {}
            Err(_) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("cannot parse {field:?} as a number"),
                })
            }
        }
        seen_content = true;
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data values".into(),
        });
    }
    Ok(values)
}

/// The 20 failure times of mechanical components that ship with the crate.
pub fn mechanical_components() -> Vec<f64> {
    parse_dataset(MECHANICAL).expect("bundled dataset parses")
}
