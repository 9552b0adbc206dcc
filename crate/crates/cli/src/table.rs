//! Delimited output tables and run manifests.
//!
//! A table is UTF-8 text: `#` comment lines carrying the manifest and any
//! header block, a header row, then comma-separated rows with 17 significant
//! digits. Nothing time-dependent goes into a table, so replaying a manifest
//! reproduces it byte for byte; wall-clock data lives in `manifest.json`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::invocation::Invocation;

pub const TOOL: &str = "fbsense";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    /// Output files, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(invocation: Invocation, outputs: Vec<String>) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            invocation,
            outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_seconds: f64,
    pub elapsed_seconds: f64,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub manifest: RunManifest,
    pub wall_clock: WallClock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub notes: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    pub fn from_columns(name: impl Into<String>, columns: &[&str], data: &[&[f64]]) -> Self {
        let mut t = Self::new(name, columns);
        let n = data.first().map_or(0, |c| c.len());
        t.rows = (0..n).map(|i| data.iter().map(|c| c[i]).collect()).collect();
        t
    }

    /// Number of lines preceding the first numeric row of a table rendered
    /// with a manifest.
    pub fn preamble_lines(&self) -> usize {
        self.notes.len() + 3
    }

    pub fn render(&self, manifest_json: &str) -> String {
        let mut out = String::new();
        writeln!(out, "# {TOOL} {VERSION}").unwrap();
        if !manifest_json.is_empty() {
            writeln!(out, "# manifest: {manifest_json}").unwrap();
        }
        for (k, v) in &self.notes {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_losslessly() {
        let values = [0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 1e308];
        let t = Table::from_columns("t.csv", &["omega"], &[&values]);
        let text = t.render("");
        let parsed: Vec<f64> = text
            .lines()
            .skip(2)
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(parsed, values);
    }

    #[test]
    fn preamble_counts_comments_and_header() {
        let t = Table::from_columns("t.csv", &["a", "b"], &[&[1.0], &[2.0]]).note("k", 3);
        let text = t.render("{}");
        let first_row = text.lines().position(|l| l.starts_with("1.")).unwrap();
        assert_eq!(t.preamble_lines(), first_row);
    }
}
