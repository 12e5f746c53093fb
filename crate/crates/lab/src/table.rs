//! CSV output with shortest round-trip number formatting.

use std::path::Path;

use crate::error::LabError;

/// Shortest decimal string that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A header plus rows of already-formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| LabError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, LabError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { header, rows })
    }

    /// Column `name` parsed as numbers; empty cells become NaN.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, LabError> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::Format(format!("missing column {name}")))?;
        self.rows
            .iter()
            .map(|r| {
                if r[i].is_empty() {
                    Ok(f64::NAN)
                } else {
                    r[i].parse()
                        .map_err(|_| LabError::Format(format!("bad number {:?} in column {name}", r[i])))
                }
            })
            .collect()
    }
}

/// Formats an optional value; `None` becomes an empty cell.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
