use std::fmt::{self, Write as _};

use serde_json::{json, Map, Value};

use crate::args::Format;

/// One table cell. Floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // collapse −0 so exact zeros print uniformly
            Cell::Float(v) => write!(f, "{}", v + 0.0),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                write!(f, "\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// A subcommand's result: a data table plus scalar summary entries.
#[derive(Debug, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
    /// Extra free-text lines for the human summary.
    pub notes: Vec<String>,
    /// Nonzero exit requested by the command itself (e.g. failed checks).
    pub failed: bool,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn set(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.push((key, value.into()));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// The data file: a `#` config echo, then CSV or a JSON document whose
    /// first line carries the same echo under `"config"`.
    pub fn render(&self, format: Format, command: &str, config: &Value) -> String {
        let mut out = String::new();
        match format {
            Format::Csv => {
                writeln!(out, "# {}", echo(command, config)).unwrap();
                writeln!(out, "{}", self.columns.join(",")).unwrap();
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
                    writeln!(out, "{}", cells.join(",")).unwrap();
                }
            }
            Format::Json => {
                let mut cfg = Map::new();
                cfg.insert("command".into(), json!(command));
                if let Value::Object(fields) = config {
                    cfg.extend(fields.clone());
                }
                let summary: Map<String, Value> = self
                    .summary
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_json()))
                    .collect();
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::to_json).collect()))
                    .collect();
                writeln!(out, "{{\"config\":{},", Value::Object(cfg)).unwrap();
                writeln!(out, "\"summary\":{},", Value::Object(summary)).unwrap();
                writeln!(out, "\"columns\":{},", json!(self.columns)).unwrap();
                writeln!(out, "\"rows\":[").unwrap();
                for (i, row) in rows.iter().enumerate() {
                    let sep = if i + 1 < rows.len() { "," } else { "" };
                    writeln!(out, "{row}{sep}").unwrap();
                }
                writeln!(out, "]}}").unwrap();
            }
        }
        out
    }

    /// Human-readable summary.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.summary {
            writeln!(out, "{k:<width$}  {v}").unwrap();
        }
        for line in &self.notes {
            writeln!(out, "{line}").unwrap();
        }
        out
    }
}

/// `largen <command> key=value ...` for every effective setting, keys sorted.
pub fn echo(command: &str, config: &Value) -> String {
    let mut parts = vec![format!("largen {command}")];
    if let Value::Object(fields) = config {
        for (k, v) in fields {
            let text = match v {
                Value::String(s) => format!("\"{s}\""),
                Value::Array(items) => items
                    .iter()
                    .map(Value::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            parts.push(format!("{k}={text}"));
        }
    }
    parts.join(" ")
}
