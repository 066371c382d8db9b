//! CSV tables and the run manifest.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentSpec;

/// A CSV file held in memory until the run completes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&str]) -> Self {
        Self { file: file.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.file);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Format heterogeneous cells; floats use the shortest round-trip form.
#[macro_export]
macro_rules! cells {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::cell(&$x)),*]
    };
}

pub fn cell<T: Display>(x: &T) -> String {
    x.to_string()
}

/// Files produced by one experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Pre-rendered files such as per-run trajectories.
    pub files: Vec<(String, Vec<u8>)>,
    /// Bound or identity violations; non-zero turns into exit code 1.
    pub violations: u64,
}

impl Outcome {
    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    /// Every output file name with its bytes, in a fixed order.
    pub fn rendered(&self) -> Vec<(String, Vec<u8>)> {
        let mut out: Vec<(String, Vec<u8>)> = self.tables.iter().map(|t| (t.file.clone(), t.to_csv())).collect();
        out.extend(self.files.iter().cloned());
        out
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in self.rendered() {
            let path = dir.join(&name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub spec: &'a ExperimentSpec,
    pub version: &'static str,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub violations: u64,
    pub files: Vec<String>,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
