use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rows under fixed column headers. CSV and JSON print the same number
/// texts, so both formats carry identical numeric content.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell))?;
                }
                w.flush()
            }
            Format::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect::<Map<_, _>>()))
                    .collect();
                write_json(&objects, out)
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, out: &mut dyn Write) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

/// JSON number for a float; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_share_number_text() {
        let mut t = Table::new(&["t", "re"]);
        t.push(vec![num(0.1), num(1.0 / 3.0)]);
        let mut c = Vec::new();
        t.write(Format::Csv, &mut c).unwrap();
        let mut j = Vec::new();
        t.write(Format::Json, &mut j).unwrap();
        let c = String::from_utf8(c).unwrap();
        let j = String::from_utf8(j).unwrap();
        assert_eq!(c, "t,re\n0.1,0.3333333333333333\n");
        assert!(j.contains("\"re\": 0.3333333333333333"));
    }
}
