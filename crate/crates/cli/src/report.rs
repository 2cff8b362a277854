//! CSV and JSON artifacts. Floats in CSV use 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

/// A table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by the header.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| {
                            let v = match c {
                                Cell::Int(i) => json!(i),
                                Cell::Float(x) => json!(x),
                            };
                            (h.clone(), v)
                        })
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn write_csv(dir: &Path, name: &str, table: &Table) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(&table.header).map_err(|e| io_err(&path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))
            .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Writes `value` as a JSON object carrying `"schema": "v1"`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let body = serde_json::to_value(value).map_err(|e| io_err(&path, e))?;
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), json!(SCHEMA));
    match body {
        Value::Object(map) => obj.extend(map),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}
