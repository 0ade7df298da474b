use std::io::Write;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Str,
    Int,
    Float,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub ty: ColumnType,
    /// Empty cells allowed.
    pub nullable: bool,
}

pub(crate) const fn col(name: &'static str, ty: ColumnType) -> Column {
    Column {
        name,
        ty,
        nullable: false,
    }
}

pub(crate) const fn opt(name: &'static str, ty: ColumnType) -> Column {
    Column {
        name,
        ty,
        nullable: true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Cell::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Cell::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Str(v) => Some(v),
            _ => None,
        }
    }

    fn matches(&self, ty: ColumnType) -> bool {
        matches!(
            (self, ty),
            (Cell::Str(_), ColumnType::Str)
                | (Cell::Int(_), ColumnType::Int)
                | (Cell::Float(_), ColumnType::Float)
                | (Cell::Bool(_), ColumnType::Bool)
        )
    }

    /// CSV text; floats carry 17 significant digits.
    pub fn to_csv_field(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Null => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Str(v) => s.serialize_str(v),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Float(v) => s.serialize_f64(*v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::Null => s.serialize_none(),
        }
    }
}

/// A typed table with a fixed column set. Every float is finite; missing
/// values are explicit nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    id: String,
    columns: &'static [Column],
    rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(id: impl Into<String>, columns: &'static [Column]) -> Self {
        Self {
            id: id.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn columns(&self) -> &'static [Column] {
        self.columns
    }

    pub fn column_names(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.name).collect()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch(format!(
                "table {}: row has {} cells for {} columns",
                self.id,
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, col) in row.iter().zip(self.columns) {
            let ok = match cell {
                Cell::Null => col.nullable,
                Cell::Float(v) => v.is_finite() && cell.matches(col.ty),
                other => other.matches(col.ty),
            };
            if !ok {
                return Err(Error::InvalidSpec(format!(
                    "table {}: bad value {cell:?} for column {} ({:?})",
                    self.id, col.name, col.ty
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Cells of one column, in row order.
    pub fn column(&self, name: &str) -> Result<impl Iterator<Item = &Cell> + '_> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::InvalidSpec(format!("table {} has no column {name}", self.id)))?;
        Ok(self.rows.iter().map(move |r| &r[i]))
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column_index(name).and_then(|i| self.rows.get(row).map(|r| &r[i]))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(self.columns.iter().map(|c| c.name))?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::to_csv_field))?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON array of records, keys in column order.
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

struct Record<'a> {
    columns: &'static [Column],
    row: &'a [Cell],
}

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (c, v) in self.columns.iter().zip(self.row) {
            map.serialize_entry(c.name, v)?;
        }
        map.end()
    }
}

impl Serialize for ResultTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for row in &self.rows {
            seq.serialize_element(&Record {
                columns: self.columns,
                row,
            })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLS: &[Column] = &[
        col("name", ColumnType::Str),
        col("x", ColumnType::Float),
        opt("k", ColumnType::Int),
        col("ok", ColumnType::Bool),
    ];

    fn table() -> ResultTable {
        let mut t = ResultTable::new("t", COLS);
        t.push(vec!["a,b".into(), 0.1.into(), Cell::Null, true.into()]).unwrap();
        t.push(vec!["c".into(), (-2.5e-300).into(), 3i64.into(), false.into()]).unwrap();
        t
    }

    #[test]
    fn rejects_bad_rows() {
        let mut t = table();
        assert!(t.push(vec!["a".into()]).is_err());
        assert!(t.push(vec!["a".into(), f64::NAN.into(), Cell::Null, true.into()]).is_err());
        assert!(t.push(vec!["a".into(), 1.0.into(), Cell::Null, Cell::Null]).is_err());
        assert!(t.push(vec!["a".into(), 1i64.into(), Cell::Null, true.into()]).is_err());
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn csv_roundtrips_floats() {
        let mut buf = Vec::new();
        table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.split("\r\n");
        assert_eq!(lines.next(), Some("name,x,k,ok"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("\"a,b\",1.0000000000000001e-1,,true"));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rec = rdr.records().nth(1).unwrap().unwrap();
        assert_eq!(rec[1].parse::<f64>().unwrap(), -2.5e-300);
    }

    #[test]
    fn json_keeps_column_order() {
        let mut buf = Vec::new();
        table().write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let name = text.find("\"name\"").unwrap();
        let ok = text.find("\"ok\"").unwrap();
        assert!(name < ok);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["k"], serde_json::Value::Null);
        assert_eq!(v[1]["x"].as_f64(), Some(-2.5e-300));
    }
}
