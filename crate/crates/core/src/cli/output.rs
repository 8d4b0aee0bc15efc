//! Report envelope and its CSV/JSON renderings.
//!
//! Floats are written in shortest round-trip form and every map is ordered,
//! so identical runs produce identical bytes.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SCHEMA: u32 = 1;
pub const TOOL: &str = "multiport";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

/// Shortest string that parses back to `x`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Output of one command before rendering.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub summary: Map<String, Value>,
    pub tables: Vec<Table>,
    /// Set when a self-check failed; the report is still written.
    pub failure: Option<String>,
}

impl Report {
    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }
}

pub struct Envelope<'a> {
    pub command: &'a str,
    pub config: Value,
    pub seed: Option<u64>,
    pub runtime_seconds: Option<f64>,
}

impl Envelope<'_> {
    pub fn render(&self, report: &Report, format: Format) -> String {
        match format {
            Format::Json => self.json(report),
            Format::Csv => self.csv(report),
        }
    }

    fn json(&self, report: &Report) -> String {
        let mut tables = Map::new();
        for t in &report.tables {
            tables.insert(t.name.clone(), t.json());
        }
        let mut root = Map::new();
        root.insert("schema".into(), json!(SCHEMA));
        root.insert("tool".into(), json!(TOOL));
        root.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        root.insert("command".into(), json!(self.command));
        root.insert("config".into(), self.config.clone());
        root.insert("seed".into(), json!(self.seed));
        if let Some(t) = self.runtime_seconds {
            root.insert("runtime_seconds".into(), json!(t));
        }
        root.insert(
            "result".into(),
            json!({ "summary": report.summary, "tables": tables }),
        );
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json value");
        s.push('\n');
        s
    }

    fn csv(&self, report: &Report) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema: {SCHEMA}");
        let _ = writeln!(s, "# tool: {TOOL} {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config: {}", self.config);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed: {seed}");
            }
            None => s.push_str("# seed: none\n"),
        }
        if let Some(t) = self.runtime_seconds {
            let _ = writeln!(s, "# runtime_seconds: {}", float(t));
        }
        let _ = writeln!(s, "# summary: {}", Value::Object(report.summary.clone()));
        for (i, t) in report.tables.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            let _ = writeln!(s, "# table: {}", t.name);
            s.push_str(&t.columns.join(","));
            s.push('\n');
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-20, 16.0 / 3.0, -2.5e300] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![Cell::Num(0.5), Cell::Text("x,y".into())]);
        t.push(vec![Cell::Missing, Cell::Int(3)]);
        let mut r = Report::default();
        r.set("k", 2);
        r.tables.push(t);
        let env = Envelope {
            command: "demo",
            config: json!({"z": 1, "a": 2}),
            seed: None,
            runtime_seconds: None,
        };
        let csv = env.render(&r, Format::Csv);
        assert!(csv.ends_with("a,b\n0.5,\"x,y\"\n,3\n"));
        assert!(csv.contains("# config: {\"a\":2,\"z\":1}\n"));
        assert!(!csv.contains('\r'));
        let json: Value = serde_json::from_str(&env.render(&r, Format::Json)).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(json["result"]["tables"]["t"]["rows"][1][0], Value::Null);
    }
}
