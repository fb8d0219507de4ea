use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::stages::Criterion;

/// A CSV table with preformatted cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            header: header.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        self.rows.push(cells.into_iter().collect());
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let csv_error = |e: csv::Error| Error::Io(std::io::Error::other(e));
        writer.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            writer.write_record(row).map_err(csv_error)?;
        }
        writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Structured record of the error that ended a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
    pub stage: Option<String>,
}

impl ErrorRecord {
    pub fn new(error: &Error, stage: Option<&str>) -> Self {
        Self {
            kind: error.kind(),
            message: error.to_string(),
            exit_code: error.exit_code(),
            stage: stage.map(str::to_owned),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageGrid {
    pub stage: String,
    pub nodes: Vec<usize>,
}

/// Written at the end of every run that got past configuration, including failed ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub strict: bool,
    pub grids: Vec<StageGrid>,
    pub artifacts: Vec<String>,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
    pub error: Option<ErrorRecord>,
    pub exit_code: i32,
}

/// Output directory that records what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    pub written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_owned(),
            written: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_table(&mut self, table: &Table) -> Result<()> {
        let bytes = table.to_csv()?;
        self.write_bytes(&table.name, &bytes)
    }
}
