//! Tabular output as CSV or JSON.

use std::io::Write;

use mallows_core::limits::experiment::format_real;
use mallows_core::limits::StatRow;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(BigUint),
    /// `None` renders as an empty field or `null`.
    Real(Option<f64>),
    Bool(Option<bool>),
    Text(String),
}

impl Cell {
    pub fn int(x: impl Into<BigUint>) -> Self {
        Cell::Int(x.into())
    }

    pub fn real(x: f64) -> Self {
        Cell::Real(Some(x))
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::Real(x) => x.map(format_real).unwrap_or_default(),
            Cell::Bool(b) => b.map(|b| b.to_string()).unwrap_or_default(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Counts beyond u64 are emitted as decimal strings so they stay exact.
            Cell::Int(x) => x
                .to_u64()
                .map_or_else(|| Value::String(x.to_string()), Value::from),
            Cell::Real(x) => x
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Bool(b) => b.map_or(Value::Null, Value::Bool),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// Rows under a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_stats(rows: &[StatRow]) -> Self {
        let mut t = Table::new(&["name", "estimate", "se", "target", "pass"]);
        for r in rows {
            t.push(vec![
                Cell::Text(r.name.clone()),
                Cell::real(r.estimate),
                Cell::Real(r.se),
                Cell::Real(r.target),
                Cell::Bool(r.pass),
            ]);
        }
        t
    }

    /// Header row, then one record per row; an empty table is header only.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        w.flush()?;
        Ok(())
    }

    /// A JSON array with one object per row, keys in column order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}
