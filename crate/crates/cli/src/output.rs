//! CSV tables with a `# key: value` header block and a JSON sidecar
//! carrying the same content.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { header: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.header.push((key.to_string(), value.to_string()));
        self
    }

    /// Embeds `config` as single-line JSON.
    pub fn config<T: Serialize>(&mut self, config: &T) -> &mut Self {
        let line = serde_json::to_string(config).expect("config serializes");
        self.meta("config", line)
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let header: serde_json::Map<String, Value> =
            self.header.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({ "header": header, "columns": self.columns, "rows": self.rows })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let csv = dir.join(format!("{stem}.csv"));
        let sidecar = dir.join(format!("{stem}.json"));
        fs::write(&csv, self.to_csv()).map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
        let body = serde_json::to_string_pretty(&self.to_json()).expect("table serializes") + "\n";
        fs::write(&sidecar, body).map_err(|e| CliError::Io(format!("{}: {e}", sidecar.display())))?;
        Ok(vec![csv, sidecar])
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// JSON number for finite values, the string form otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}
