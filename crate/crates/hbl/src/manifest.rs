//! Output files and the run manifest that lists them.
//!
//! Data files carry no timestamps, so identical inputs give identical bytes.
//! Wall-clock information lives only in the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::numfmt;

/// Version of every data and manifest schema.
pub const SCHEMA: &str = "1";

/// Column headers of the CSV schemas.
pub const CSV_SCHEMAS: &[(&str, &str)] = &[
    ("hbl.profile.csv", "r,phi,V,g"),
    ("hbl.spectrum.csv", "operator,ell,index,lambda_b_matrix,error_matrix,lambda_b_shooting,error_shooting,lambda_l"),
    ("hbl.ggmt_table.csv", "convention,delta,kappa,G"),
    ("hbl.scan.csv", "c,count,lambda_b_0,lambda_b_1"),
    ("hbl.history.csv", "tau,sup_norm,sigma_norm,unstable_coef"),
    ("hbl.field.csv", "r,f"),
    ("hbl.sup_history.csv", "t,sup_norm"),
];

/// `schema_id` values of JSON data files.
pub const JSON_SCHEMAS: &[&str] = &["hbl.spectrum", "hbl.ggmt", "hbl.scan", "hbl.evolve"];

pub fn csv_header(schema_id: &str) -> Option<&'static str> {
    CSV_SCHEMAS.iter().find(|(id, _)| *id == schema_id).map(|(_, h)| *h)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputEntry {
    pub path: String,
    pub format: &'static str,
    pub schema_id: String,
}

/// Collects the files a command writes into one directory.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputEntry>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[OutputEntry] {
        &self.files
    }

    fn write(&mut self, name: &str, format: &'static str, schema_id: &str, body: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(self.dir.display().to_string(), e))?;
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.files.push(OutputEntry { path: name.to_string(), format, schema_id: schema_id.to_string() });
        Ok(())
    }

    /// Lists a file written elsewhere; paths inside the output directory are
    /// stored relative to it.
    pub fn record(&mut self, path: &Path, format: &'static str, schema_id: &str) {
        let shown = path.strip_prefix(&self.dir).unwrap_or(path).display().to_string();
        self.files.push(OutputEntry { path: shown, format, schema_id: schema_id.to_string() });
    }

    /// Writes `value` with the `schema` and `schema_id` fields prepended.
    pub fn json(&mut self, name: &str, schema_id: &str, value: Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("schema".into(), Value::from(SCHEMA));
        obj.insert("schema_id".into(), Value::from(schema_id));
        match value {
            Value::Object(fields) => obj.extend(fields),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let body = numfmt::to_json(&Value::Object(obj)).map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, "json", schema_id, &body)
    }

    /// Writes numeric rows under the registered header of `schema_id`.
    /// Text columns are passed through `label` and prepended to each row.
    pub fn csv(&mut self, name: &str, schema_id: &str, rows: &[CsvRow]) -> Result<(), CliError> {
        let header = csv_header(schema_id).expect("CSV schema is registered");
        let mut body = String::with_capacity(64 * (rows.len() + 1));
        body.push_str(header);
        body.push('\n');
        for row in rows {
            let mut first = true;
            for cell in row.labels.iter().cloned().chain(row.values.iter().map(|&x| numfmt::csv(x))) {
                if !first {
                    body.push(',');
                }
                body.push_str(&cell);
                first = false;
            }
            body.push('\n');
        }
        self.write(name, "csv", schema_id, &body)
    }
}

/// A CSV line: leading text cells, then numbers.
#[derive(Debug, Clone, Default)]
pub struct CsvRow {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl CsvRow {
    pub fn numbers(values: Vec<f64>) -> Self {
        Self { labels: Vec::new(), values }
    }

    pub fn labelled(labels: Vec<String>, values: Vec<f64>) -> Self {
        Self { labels, values }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub schema_id: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub command_line: Vec<String>,
    pub parameters: Value,
    pub scheme: BTreeMap<String, Value>,
    pub outputs: Vec<OutputEntry>,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub diagnostic: Option<Value>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

/// Timer started when a command begins.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    start: Instant,
    unix: f64,
}

impl Clock {
    pub fn start() -> Self {
        let unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        Self { start: Instant::now(), unix }
    }

    pub fn unix(&self) -> f64 {
        self.unix
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

pub fn write_manifest(dir: &Path, stem: &str, manifest: &RunManifest) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let path = dir.join(format!("manifest_{stem}.json"));
    let body = numfmt::to_json(manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
    fs::write(&path, body).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(path)
}
