//! Typed tabular data and CSV ingestion.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Number,
    String,
    Date,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum Value {
    Number(f64),
    Text(String),
    Date(NaiveDate),
}

impl Value {
    /// Position on a continuous scale: numbers as-is, dates as days since 1970-01-01.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Date(d) => Some(date_to_days(*d)),
            Value::Text(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Number(x) => serde_json::json!(x),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Date(d) => serde_json::Value::String(d.format(DATE_FORMAT).to_string()),
        }
    }

    pub fn parse(raw: &str, ty: ColumnType) -> Option<Value> {
        let raw = raw.trim();
        match ty {
            ColumnType::Number => raw.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Number),
            ColumnType::Date => NaiveDate::parse_from_str(raw, DATE_FORMAT).ok().map(Value::Date),
            ColumnType::String => Some(Value::Text(raw.to_string())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::Date(d) => write!(f, "{}", d.format(DATE_FORMAT)),
        }
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

pub fn date_to_days(d: NaiveDate) -> f64 {
    (d - epoch()).num_days() as f64
}

pub fn days_to_date(days: f64) -> Option<NaiveDate> {
    epoch().checked_add_signed(chrono::Duration::days(days.round() as i64))
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {col}: cannot read {raw:?} as {ty:?}")]
    Cell { row: usize, col: usize, raw: String, ty: ColumnType },
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
}

/// Rectangular table; row ids are row positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Value>>) -> Result<Self, TableError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|d| d.name == c.name) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(TableError::Ragged {
                    row: r,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
            for (c, (v, col)) in row.iter().zip(&columns).enumerate() {
                let ok = matches!(
                    (v, col.ty),
                    (Value::Number(_), ColumnType::Number)
                        | (Value::Text(_), ColumnType::String)
                        | (Value::Date(_), ColumnType::Date)
                );
                if !ok {
                    return Err(TableError::Cell {
                        row: r,
                        col: c,
                        raw: v.to_string(),
                        ty: col.ty,
                    });
                }
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> std::ops::Range<usize> {
        0..self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&Value> {
        self.rows.get(row).and_then(|r| r.get(col))
    }

    pub fn row(&self, row: usize) -> Option<&[Value]> {
        self.rows.get(row).map(Vec::as_slice)
    }

    /// Values of one column in row order.
    pub fn values(&self, name: &str) -> Result<impl Iterator<Item = &Value> + '_, TableError> {
        let c = self
            .column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(move |r| &r[c]))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    /// `{columns: [{name, type}], rows: [[...]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, TableError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Inline {
            columns: Vec<Column>,
            rows: Vec<Vec<serde_json::Value>>,
        }
        let inline: Inline = serde_json::from_value(v.clone()).map_err(|e| TableError::Csv(e.to_string()))?;
        let mut rows = Vec::with_capacity(inline.rows.len());
        for (r, raw) in inline.rows.iter().enumerate() {
            if raw.len() != inline.columns.len() {
                return Err(TableError::Ragged {
                    row: r,
                    expected: inline.columns.len(),
                    found: raw.len(),
                });
            }
            let mut row = Vec::with_capacity(raw.len());
            for (c, (cell, col)) in raw.iter().zip(&inline.columns).enumerate() {
                let parsed = match (cell, col.ty) {
                    (serde_json::Value::Number(n), ColumnType::Number) => n.as_f64().map(Value::Number),
                    (serde_json::Value::String(s), ty) => Value::parse(s, ty),
                    _ => None,
                };
                row.push(parsed.ok_or_else(|| TableError::Cell {
                    row: r,
                    col: c,
                    raw: cell.to_string(),
                    ty: col.ty,
                })?);
            }
            rows.push(row);
        }
        Table::new(inline.columns, rows)
    }
}

/// Reads a headed CSV. Columns without a hint are typed as number, then
/// date, then string, whichever first fits every cell.
pub fn ingest_csv(bytes: &[u8], hints: &BTreeMap<String, ColumnType>) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| TableError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut raw_rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(TableError::Ragged {
                row: r,
                expected: header.len(),
                found: rec.len(),
            });
        }
        raw_rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    for name in hints.keys() {
        if !header.contains(name) {
            return Err(TableError::UnknownColumn(name.clone()));
        }
    }
    let columns: Vec<Column> = header
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let ty = hints.get(name).copied().unwrap_or_else(|| {
                [ColumnType::Number, ColumnType::Date]
                    .into_iter()
                    .find(|ty| raw_rows.iter().all(|row| Value::parse(&row[c], *ty).is_some()))
                    .unwrap_or(ColumnType::String)
            });
            Column { name: name.clone(), ty }
        })
        .collect();
    let mut rows = Vec::with_capacity(raw_rows.len());
    for (r, raw) in raw_rows.iter().enumerate() {
        let mut row = Vec::with_capacity(raw.len());
        for (c, cell) in raw.iter().enumerate() {
            let ty = columns[c].ty;
            row.push(Value::parse(cell, ty).ok_or_else(|| TableError::Cell {
                row: r,
                col: c,
                raw: cell.clone(),
                ty,
            })?);
        }
        rows.push(row);
    }
    Table::new(columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hints(pairs: &[(&str, ColumnType)]) -> BTreeMap<String, ColumnType> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn numeric_rows_get_positional_ids() {
        let t = ingest_csv(b"a,b\n1,2\n3,4\n5,6\n", &BTreeMap::new()).unwrap();
        assert_eq!(t.ids(), 0..3);
        assert_eq!(t.column("a").unwrap().ty, ColumnType::Number);
        assert_eq!(t.get(2, 1), Some(&Value::Number(6.0)));
    }

    #[test]
    fn bad_number_reports_row_and_col() {
        let err = ingest_csv(b"a,b\n1,2\n3,abc\n", &hints(&[("b", ColumnType::Number)])).unwrap_err();
        assert_eq!(
            err,
            TableError::Cell {
                row: 1,
                col: 1,
                raw: "abc".into(),
                ty: ColumnType::Number
            }
        );
    }

    #[test]
    fn ragged_row_rejected() {
        let err = ingest_csv(b"a,b\n1,2\n3\n", &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, TableError::Ragged { row: 1, .. }));
    }

    #[test]
    fn dates_survive_parse_format_parse() {
        let t = ingest_csv(b"date,n\n2016-01-17,1\n", &BTreeMap::new()).unwrap();
        assert_eq!(t.column("date").unwrap().ty, ColumnType::Date);
        let d = NaiveDate::from_ymd_opt(2016, 1, 17).unwrap();
        assert_eq!(t.get(0, 0), Some(&Value::Date(d)));
        let again = ingest_csv(t.to_csv().as_bytes(), &BTreeMap::new()).unwrap();
        assert_eq!(again, t);
        let via_json = Table::from_json(&t.to_json()).unwrap();
        assert_eq!(via_json, t);
        assert_eq!(days_to_date(date_to_days(d)), Some(d));
    }

    #[test]
    fn hint_forces_string() {
        let t = ingest_csv(b"code\n01\n02\n", &hints(&[("code", ColumnType::String)])).unwrap();
        assert_eq!(t.get(0, 0), Some(&Value::Text("01".into())));
    }
}
