//! CSV tables with a JSON metadata file next to each one.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a> {
    pub command: &'a str,
    pub file: String,
    pub columns: Vec<&'a str>,
    pub units: &'static str,
    pub version: &'static str,
    pub warnings: Vec<String>,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

pub const UNITS: &str = "hbar = k_B = 1; energies and rates in c/xi, times in xi/c, momenta in 1/xi";

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes `<out_dir>/<name>` and `<out_dir>/<stem>.meta.json`; returns the CSV path.
pub fn write_table(
    cfg: &RunConfig,
    command: &str,
    table: &Table,
    warnings: Vec<String>,
    extra: serde_json::Value,
) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    let path = cfg.out_dir.join(&table.name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;

    let meta = Metadata {
        command,
        file: table.name.clone(),
        columns: table.header.clone(),
        units: UNITS,
        version: env!("CARGO_PKG_VERSION"),
        warnings,
        config: cfg,
        extra,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(sidecar_path(&path), text + "\n")?;
    Ok(path)
}

pub fn no_extra() -> serde_json::Value {
    json!(null)
}
