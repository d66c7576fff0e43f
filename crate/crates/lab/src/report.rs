use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::{LabError, ARTIFACT, VERSION};

/// One named invariant. Only gating checks decide the exit code; the others
/// are reported diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub gating: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, gating: true, detail: detail.into() }
    }

    pub fn diagnostic(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { gating: false, ..Check::new(name, passed, detail) }
    }
}

/// Plot data; written as `<subcommand>_<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Table { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting, so CSV values reparse exactly.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub subcommand: &'static str,
    pub checks: Vec<Check>,
    pub record: Value,
    pub tables: Vec<Table>,
}

impl SuiteReport {
    pub fn new(subcommand: &'static str) -> Self {
        SuiteReport { subcommand, checks: Vec::new(), record: Value::Object(Default::default()), tables: Vec::new() }
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("records serialize");
        self.record.as_object_mut().expect("record is an object").insert(key.to_string(), v);
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_gating(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed).collect()
    }

    pub fn passed(&self) -> bool {
        self.failed_gating().is_empty()
    }

    /// The canonical record: artifact, version, resolved config, checks.
    pub fn to_json(&self, config: &ExperimentConfig) -> Value {
        serde_json::json!({
            "artifact": ARTIFACT,
            "version": VERSION,
            "subcommand": self.subcommand,
            "config": config,
            "passed": self.passed(),
            "checks": self.checks,
            "record": self.record,
        })
    }

    /// Writes `<subcommand>.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<(), LabError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| LabError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let json_path = dir.join(format!("{}.json", self.subcommand));
        let mut text = serde_json::to_string_pretty(&self.to_json(config)).expect("records serialize");
        text.push('\n');
        fs::write(&json_path, text).map_err(io(&json_path))?;
        let config_line = serde_json::to_string(config).expect("config serializes");
        for table in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.subcommand, table.name));
            let mut file = fs::File::create(&path).map_err(io(&path))?;
            writeln!(file, "# {ARTIFACT} {VERSION} {}", self.subcommand).map_err(io(&path))?;
            writeln!(file, "# config: {config_line}").map_err(io(&path))?;
            let mut w = csv::Writer::from_writer(file);
            let csv_err = |e: csv::Error| LabError::Io { path: path.display().to_string(), source: e.into() };
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(io(&path))?;
        }
        Ok(())
    }
}
