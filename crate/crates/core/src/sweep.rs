//! Tabular sweep results, serializable to CSV.

use crate::error::{GmeError, Result};

#[derive(Debug, Clone)]
pub enum ColumnData {
    Float(Vec<f64>),
    Bool(Vec<bool>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float(v) => v.len(),
            ColumnData::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Ordered, named, equal-length columns plus free-form metadata.
///
/// Unstable grid points are marked through explicit boolean flag columns;
/// float payloads may be infinite there but never NaN.
#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub columns: Vec<Column>,
    pub metadata: Vec<(String, String)>,
}

impl SweepTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_floats(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push(Column { name: name.into(), data: ColumnData::Float(values) });
    }

    pub fn push_bools(&mut self, name: impl Into<String>, values: Vec<bool>) {
        self.columns.push(Column { name: name.into(), data: ColumnData::Bool(values) });
    }

    pub fn add_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn floats(&self, name: &str) -> Option<&[f64]> {
        match self.column(name).map(|c| &c.data) {
            Some(ColumnData::Float(v)) => Some(v),
            _ => None,
        }
    }

    pub fn bools(&self, name: &str) -> Option<&[bool]> {
        match self.column(name).map(|c| &c.data) {
            Some(ColumnData::Bool(v)) => Some(v),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.rows();
        for c in &self.columns {
            if c.data.len() != rows {
                return Err(GmeError::DimensionMismatch(format!(
                    "column '{}' has {} rows, expected {rows}",
                    c.name,
                    c.data.len()
                )));
            }
            if let ColumnData::Float(v) = &c.data {
                if v.iter().any(|x| x.is_nan()) {
                    return Err(GmeError::InvalidParams(format!(
                        "column '{}' contains NaN",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Comma-separated rendering with a header row. Floats use Rust's
    /// shortest round-trip formatting, so identical tables give identical
    /// bytes.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for row in 0..self.rows() {
            for (i, c) in self.columns.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match &c.data {
                    ColumnData::Float(v) => out.push_str(&format!("{}", v[row])),
                    ColumnData::Bool(v) => out.push_str(if v[row] { "true" } else { "false" }),
                }
            }
            out.push('\n');
        }
        out
    }
}
