//! Configuration loading and text artifacts (CSV tables, VTK fields).

mod config;
mod vtk;

pub use config::*;
pub use vtk::{sample_field, structured_grid_vtk, FieldSample, FieldGrid};

use std::path::Path;

/// Identifies the producing tool and configuration in every artifact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
        }
    }

    /// `# tool version config=<hash>`; CSV readers skip it as a comment.
    pub fn line(&self) -> String {
        format!("# {} {} config={}", self.tool, self.version, self.config_hash)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header and rows of already formatted fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    /// Comma-separated text with LF endings, preceded by the provenance line.
    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        format!("{}\n{body}", prov.line())
    }

    pub fn write(&self, path: &Path, prov: &Provenance) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv(prov))
    }

    /// Parse text written by [`Table::to_csv`] (comment lines skipped).
    pub fn parse(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<Result<_, _>>()?;
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric value of a cell; `None` if missing or not a number.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(name)?)?.parse().ok()
    }
}
