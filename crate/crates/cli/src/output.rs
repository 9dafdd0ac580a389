//! Result files: numeric CSV tables, a TOML summary of scalar results with a
//! checks table, and a TOML run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const SUMMARY_FILE: &str = "summary.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Rectangular table of numbers with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            // shortest representation that parses back to the same value
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 2))?;
            if row.len() != columns.len() {
                bail!("{}: row {} has {} fields, expected {}", path.display(), i + 2, row.len(), columns.len());
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `<= 1e-12`.
    pub condition: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!("<= {limit:e}"), passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!(">= {limit:e}"), passed: value >= limit }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!("> {limit:e}"), passed: value > limit }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, condition: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Self { name: name.into(), value: if passed { 1.0 } else { 0.0 }, condition: "== 1".into(), passed }
    }
}

/// Scalar results of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.into(), ..Default::default() }
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub files: Vec<String>,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
