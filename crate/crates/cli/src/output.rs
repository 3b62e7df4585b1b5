//! Tables rendered as commented CSV or as JSON.

use serde_json::{json, Map, Value};

use crate::config::{OutputFormat, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // 17 significant digits
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // NaN has no JSON form
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(_) | Cell::Empty => Value::Null,
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub command: String,
    /// `(name, description)`; the description goes into the CSV header comments.
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalars reported once per run, after the rows.
    pub summary: Vec<(String, Cell)>,
    pub notes: Vec<String>,
    /// Internal assertions that failed; any entry makes the exit code non-zero.
    pub failures: Vec<String>,
}

impl Table {
    pub fn new(command: &str, columns: Vec<(&'static str, &'static str)>) -> Self {
        Table { command: command.to_owned(), columns, ..Table::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summary(&mut self, name: impl Into<String>, value: impl Into<Cell>) {
        self.summary.push((name.into(), value.into()));
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            OutputFormat::Csv => self.csv(cfg),
            OutputFormat::Json => self.json(cfg),
        }
    }

    fn csv(&self, cfg: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("# plasmon {}\n", self.command));
        out.push_str(&format!("# config_sha256: {}\n", cfg.hash()));
        out.push_str(&format!("# config: {}\n", serde_json::to_string(&cfg.hashed_view()).expect("config serializes")));
        for (name, desc) in &self.columns {
            out.push_str(&format!("# column {name}: {desc}\n"));
        }
        for note in &self.notes {
            out.push_str(&format!("# note: {note}\n"));
        }
        let mut w = csv::WriterBuilder::new().delimiter(b',').from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0)).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        for (name, value) in &self.summary {
            out.push_str(&format!("# summary {name} = {}\n", value.csv()));
        }
        for f in &self.failures {
            out.push_str(&format!("# FAILED: {f}\n"));
        }
        out
    }

    fn json(&self, cfg: &RunConfig) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.0.to_owned(), v.json())).collect()))
            .collect();
        let columns: Map<String, Value> = self.columns.iter().map(|(n, d)| ((*n).to_owned(), json!(d))).collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(n, v)| (n.clone(), v.json())).collect();
        let doc = json!({
            "command": self.command,
            "config_sha256": cfg.hash(),
            "config": cfg.hashed_view(),
            "columns": columns,
            "rows": rows,
            "summary": summary,
            "notes": self.notes,
            "failures": self.failures,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}
