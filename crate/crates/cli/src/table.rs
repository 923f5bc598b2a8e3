//! Result tables. CSV carries the provenance as `#` comment lines above the
//! header; JSON carries it as fields next to `columns` and `rows`.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::config::{Format, Resolved};

pub const TABLE_SCHEMA: &str = "bbm-table/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
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

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(fmt_float(*x)),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub command: String,
    pub seed: u64,
    pub digest: String,
    pub grid_step: Option<f64>,
    pub config: Resolved,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(
        command: &str,
        seed: u64,
        grid_step: Option<f64>,
        config: Resolved,
        columns: &[&'static str],
    ) -> Self {
        Self {
            command: command.to_string(),
            seed,
            digest: config.digest(),
            grid_step,
            config,
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.push((key, value.into()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn grid_text(&self) -> String {
        self.grid_step.map_or_else(|| "none".into(), fmt_float)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema: {TABLE_SCHEMA}");
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# version: {}", crate::VERSION);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# digest: {}", self.digest);
        let _ = writeln!(out, "# grid_step: {}", self.grid_text());
        let _ = writeln!(
            out,
            "# config: {}",
            serde_json::to_string(self.config.values()).unwrap_or_default()
        );
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# summary.{k}: {}", v.csv());
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let summary: Map<String, Value> = self
            .summary
            .iter()
            .map(|(k, v)| (k.to_string(), v.json()))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "schema": TABLE_SCHEMA,
            "command": self.command,
            "version": crate::VERSION,
            "seed": self.seed,
            "digest": self.digest,
            "grid_step": self.grid_text(),
            "config": self.config.values(),
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("tail", 7, Some(0.5), Resolved::new("tail"), &["y", "n"]);
        t.push(vec![1.5.into(), 3usize.into()]);
        t.note("width", 2.0);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines.contains(&"# seed: 7"));
        assert!(lines.iter().any(|l| l.starts_with("# digest: ")));
        assert!(lines.contains(&"# summary.width: 2.0000000000000000e0"));
        assert_eq!(lines[lines.len() - 2], "y,n");
        assert_eq!(lines[lines.len() - 1], "1.5000000000000000e0,3");
        let v: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["rows"][0][0], json!(1.5));
        assert_eq!(v["seed"], json!(7));
    }
}
