//! CSV tables and the JSON run report.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
/// Object keys are sorted, so the hash depends only on the values.
pub fn config_hash(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("json values always serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Rows of one output file. The config hash column is appended on write.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W, hash: &str) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.header.clone();
        header.push("config_hash");
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.iter().map(Cell::csv).collect();
            rec.push(hash.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows as JSON objects, each carrying the config hash.
    pub fn metrics(&self, hash: &str) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (k, c) in self.header.iter().zip(row) {
                    obj.insert(k.to_string(), c.json());
                }
                obj.insert("config_hash".into(), json!(hash));
                Value::Object(obj)
            })
            .collect()
    }
}

pub struct Report<'a> {
    pub subcommand: &'a str,
    pub config: &'a Value,
    pub hash: &'a str,
    pub table: &'a Table,
    /// Repeat the rows in the report; large tables only record their row count.
    pub echo_rows: bool,
    pub output: &'a Path,
    pub wall_clock_seconds: f64,
}

impl Report<'_> {
    pub fn to_json(&self) -> Value {
        let metrics = if self.echo_rows {
            Value::Array(self.table.metrics(self.hash))
        } else {
            json!([{ "rows": self.table.rows.len(), "config_hash": self.hash }])
        };
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": self.hash,
            "output": self.output.display().to_string(),
            "metrics": metrics,
            "wall_clock_seconds": self.wall_clock_seconds,
        })
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = File::create(path)?;
        let text = serde_json::to_string_pretty(&self.to_json()).expect("json values always serialize");
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")
    }
}
