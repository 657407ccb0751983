//! Typed, immutable tables.
//!
//! A [`Dataset`] is loaded once from CSV (see [`load_csv`]), every column is
//! classified as quantitative, categorical, geographic or temporal, and from
//! then on the table is only read. Categorical and geographic columns are
//! dictionary encoded in first-occurrence order, which the emitter relies on
//! for stable category colors.

mod aggregate;
mod infer;
mod load;

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate, histogram, scatter_pairs, year_over_year_change, yearly_change, AggFn, AggRow,
    AggregateQuery, ChangeRow, GroupBy, HistogramBin, Key, Predicate, Scalar, TimeBin,
    YearlyChangeRow,
};
pub use infer::{infer_attribute_type, parse_date, parse_number, Gazetteer};
pub use load::{load_csv, CsvOptions};

/// Errors raised while loading or querying a dataset.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("input is empty")]
    EmptyInput,
    #[error("input is not valid UTF-8 (line {line})")]
    InvalidUtf8 { line: u64 },
    #[error("row on line {line} has {found} fields, header has {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumnName(String),
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("temporal attribute `{0}` spans fewer than two years")]
    SingleYearDataset(String),
    #[error("year {year} (or {prev}) not present in `{attribute}`", prev = year - 1)]
    YearOutOfRange { attribute: String, year: i32 },
}

/// Attribute type taxonomy: measures (Q) and dimensions (C, G, T).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttrType {
    #[serde(rename = "Q", alias = "Quantitative")]
    Quantitative,
    #[serde(rename = "C", alias = "Categorical")]
    Categorical,
    #[serde(rename = "G", alias = "Geographic")]
    Geographic,
    #[serde(rename = "T", alias = "Temporal")]
    Temporal,
}

impl AttrType {
    pub fn code(self) -> &'static str {
        match self {
            AttrType::Quantitative => "Q",
            AttrType::Categorical => "C",
            AttrType::Geographic => "G",
            AttrType::Temporal => "T",
        }
    }

    /// Categorical, geographic and temporal attributes are dimensions.
    pub fn is_dimension(self) -> bool {
        !matches!(self, AttrType::Quantitative)
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttributeMeta {
    pub name: String,
    #[serde(rename = "type")]
    pub attr_type: AttrType,
    /// Distinct non-missing values.
    pub cardinality: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_range: Option<(NaiveDate, NaiveDate)>,
    pub missing_count: usize,
    pub column_index: usize,
}

/// Dictionary-encoded text column. `dictionary` is in first-occurrence order.
#[derive(Debug, Clone, PartialEq)]
pub struct TextColumn {
    pub codes: Vec<Option<u32>>,
    pub dictionary: Vec<String>,
}

impl TextColumn {
    pub fn value(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.dictionary[c as usize].as_str())
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.dictionary
            .iter()
            .position(|v| v == value)
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Number(Vec<Option<f64>>),
    Text(TextColumn),
    Date(Vec<Option<NaiveDate>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Number(v) => v.len(),
            Column::Text(t) => t.codes.len(),
            Column::Date(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Number(v) => v[row].is_none(),
            Column::Text(t) => t.codes[row].is_none(),
            Column::Date(v) => v[row].is_none(),
        }
    }

    pub fn cell(&self, row: usize) -> Cell<'_> {
        match self {
            Column::Number(v) => v[row].map_or(Cell::Missing, Cell::Number),
            Column::Text(t) => t.value(row).map_or(Cell::Missing, Cell::Text),
            Column::Date(v) => v[row].map_or(Cell::Missing, Cell::Date),
        }
    }
}

/// A single borrowed cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Number(f64),
    Text(&'a str),
    Date(NaiveDate),
    Missing,
}

impl Cell<'_> {
    pub fn to_json(self) -> serde_json::Value {
        match self {
            Cell::Number(n) => serde_json::Value::from(n),
            Cell::Text(s) => serde_json::Value::from(s),
            Cell::Date(d) => serde_json::Value::from(d.format("%Y-%m-%d").to_string()),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    attributes: Vec<AttributeMeta>,
    columns: Vec<Column>,
    row_count: usize,
    /// Distinct years per column; empty for non-date columns.
    years: Vec<BTreeSet<i32>>,
}

impl Dataset {
    pub(crate) fn from_parts(id: String, attributes: Vec<AttributeMeta>, columns: Vec<Column>) -> Self {
        let row_count = columns.first().map_or(0, Column::len);
        let years = columns
            .iter()
            .map(|c| match c {
                Column::Date(values) => values.iter().flatten().map(|d| d.year()).collect(),
                _ => BTreeSet::new(),
            })
            .collect();
        Dataset {
            id,
            attributes,
            columns,
            row_count,
            years,
        }
    }

    /// Content-derived identifier: the same bytes always load to the same id.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn attributes(&self) -> &[AttributeMeta] {
        &self.attributes
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeMeta> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&AttributeMeta, DatasetError> {
        self.attribute(name)
            .ok_or_else(|| DatasetError::UnknownAttribute(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.attribute(name).map(|a| &self.columns[a.column_index])
    }

    pub(crate) fn column_at(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn cell(&self, row: usize, attribute: &str) -> Cell<'_> {
        self.column(attribute).map_or(Cell::Missing, |c| c.cell(row))
    }

    pub fn attrs_of_type(&self, ty: AttrType) -> impl Iterator<Item = &AttributeMeta> {
        self.attributes.iter().filter(move |a| a.attr_type == ty)
    }

    /// Distinct calendar years present in a temporal attribute.
    pub fn years(&self, attribute: &str) -> BTreeSet<i32> {
        self.attribute(attribute)
            .map(|a| self.years[a.column_index].clone())
            .unwrap_or_default()
    }

    pub fn latest_year(&self, attribute: &str) -> Option<i32> {
        self.years(attribute).into_iter().next_back()
    }

    /// Row indices satisfying every predicate.
    pub fn select_rows(&self, filters: &[Predicate]) -> Result<Vec<usize>, DatasetError> {
        let compiled = aggregate::compile_filters(self, filters)?;
        Ok((0..self.row_count)
            .filter(|&r| compiled.iter().all(|p| p.matches(self, r)))
            .collect())
    }

    /// Whether a single row satisfies every predicate.
    pub fn row_matches(&self, row: usize, filters: &[Predicate]) -> Result<bool, DatasetError> {
        let compiled = aggregate::compile_filters(self, filters)?;
        Ok(compiled.iter().all(|p| p.matches(self, row)))
    }

    /// Distinct values of a text attribute in first-occurrence order.
    pub fn category_values(&self, attribute: &str) -> &[String] {
        match self.column(attribute) {
            Some(Column::Text(t)) => &t.dictionary,
            _ => &[],
        }
    }
}
