//! Versioned tables rendered as CSV or JSON.
//!
//! CSV layout: `# schema=1`, `# command=...`, one `# key=value` line per
//! resolved setting, the header row, data rows, then `# annotation ...` and
//! `# check ...` lines and a closing `# passed=true|false`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub schema: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub annotations: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Table {
    pub fn new(command: &str, config: &BTreeMap<String, String>, columns: &[&str]) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            config: config.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            annotations: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn annotate(&mut self, text: impl Into<String>) {
        self.annotations.push(text.into());
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# schema={SCHEMA}")?;
        writeln!(out, "# command={}", self.command)?;
        for (k, v) in &self.config {
            writeln!(out, "# {k}={v}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(cell_text))?;
            }
            w.flush()?;
        }
        for a in &self.annotations {
            writeln!(out, "# annotation {a}")?;
        }
        for c in &self.checks {
            writeln!(out, "# check {} {} {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
        }
        writeln!(out, "# passed={}", self.passed)?;
        Ok(out)
    }
}

/// CSV text of one cell; `null` becomes an empty field.
pub fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A number cell; non-finite values become `null` and `-0` becomes `0`.
pub fn num(x: f64) -> Value {
    let x = if x == 0.0 { 0.0 } else { x };
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

/// Comma-joined 1-based level numbers.
pub fn level_list(levels: &[usize]) -> Value {
    text(levels.iter().map(|l| (l + 1).to_string()).collect::<Vec<_>>().join(","))
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).context("writing to stdout")?;
            stdout.flush().context("writing to stdout")
        }
    }
}
