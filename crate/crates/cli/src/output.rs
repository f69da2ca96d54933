//! Run records and their JSON/CSV renderings.

use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Self-describing record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: Map<String, Value>,
    /// One object per table row.
    pub results: Value,
    pub library_version: String,
    pub timestamp: DateTime<Utc>,
    pub seed: Option<u64>,
    /// Wall-clock figures and other values that vary between identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Value>,
}

/// Column-ordered result table; the single source for both output formats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row given as `(column, value)` pairs; missing columns are null.
    pub fn push(&mut self, cells: Vec<(&str, Value)>) {
        let mut row = vec![Value::Null; self.columns.len()];
        for (name, v) in cells {
            let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = v;
        }
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().cloned()).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// RFC 4180 CSV with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Finite floats as JSON numbers, non-finite ones as null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_nulls() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![("a", text("x,\"y\"")), ("c", num(1.5))]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,c\r\n\"x,\"\"y\"\"\",,1.5\r\n");
    }

    #[test]
    fn json_rows_follow_columns() {
        let mut t = Table::new(&["n", "v"]);
        t.push(vec![("n", num(3.0)), ("v", num(f64::NAN))]);
        assert_eq!(t.to_json(), serde_json::json!([{ "n": 3.0, "v": null }]));
    }
}
