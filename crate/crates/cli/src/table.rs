//! Column-oriented artifact tables rendered as CSV or JSON.

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| Cell::Num(*v)).collect());
    }

    /// UTF-8 CSV with a header row; floats use the shortest round-trip form.
    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Numerical(format!("csv encoding: {e}"));
        wr.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            wr.write_record(&fields).map_err(fail)?;
        }
        wr.into_inner().map_err(|e| CliError::Numerical(format!("csv encoding: {e}")))
    }

    /// Array of objects keyed by column; non-finite numbers become `null`.
    pub fn to_json(&self) -> CliResult<Vec<u8>> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, c)| {
                        let v = match c {
                            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
                            Cell::Text(s) => Value::String(s.clone()),
                            Cell::Bool(b) => Value::Bool(*b),
                        };
                        (k.clone(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| CliError::Numerical(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Numeric columns of a CSV series, in header order.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl Series {
    pub fn from_csv(bytes: &[u8]) -> CliResult<Self> {
        let mut rd = csv::Reader::from_reader(bytes);
        let columns: Vec<String> = rd
            .headers()
            .map_err(|e| CliError::validation(format!("series header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut data = vec![Vec::new(); columns.len()];
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| CliError::validation(format!("series row {}: {e}", i + 2)))?;
            for (k, field) in rec.iter().enumerate().take(columns.len()) {
                data[k].push(field.trim().parse::<f64>().unwrap_or(f64::NAN));
            }
        }
        Ok(Self { columns, data })
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column by name; the error lists the available columns.
    pub fn column(&self, name: &str) -> CliResult<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| {
                CliError::validation(format!(
                    "unknown column {name:?}; available columns: {}",
                    self.columns.join(", ")
                ))
            })
    }
}
