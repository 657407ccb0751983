use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::infer::{parse_date, parse_number};
use super::{AttrType, Column, Dataset, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggFn {
    Sum,
    Mean,
    Count,
}

impl AggFn {
    pub fn label(self) -> &'static str {
        match self {
            AggFn::Sum => "Sum",
            AggFn::Mean => "Average",
            AggFn::Count => "Count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBin {
    Year,
    Month,
    Day,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupBy {
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<TimeBin>,
}

impl GroupBy {
    pub fn new(attribute: impl Into<String>) -> Self {
        GroupBy {
            attribute: attribute.into(),
            bin: None,
        }
    }

    pub fn binned(attribute: impl Into<String>, bin: TimeBin) -> Self {
        GroupBy {
            attribute: attribute.into(),
            bin: Some(bin),
        }
    }
}

/// A literal used in predicates. Strings are interpreted according to the
/// attribute they are compared against (dates parse, numbers parse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_string())
    }
}

impl From<f64> for Scalar {
    fn from(n: f64) -> Self {
        Scalar::Number(n)
    }
}

impl From<i32> for Scalar {
    fn from(n: i32) -> Self {
        Scalar::Number(n as f64)
    }
}

impl Scalar {
    fn as_text(&self) -> String {
        match self {
            Scalar::Number(n) => format!("{n}"),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Predicate {
    Eq { attribute: String, value: Scalar },
    In { attribute: String, values: Vec<Scalar> },
    /// Inclusive on both ends. On temporal attributes a bare number is a year.
    Range { attribute: String, min: Scalar, max: Scalar },
}

impl Predicate {
    pub fn attribute(&self) -> &str {
        match self {
            Predicate::Eq { attribute, .. }
            | Predicate::In { attribute, .. }
            | Predicate::Range { attribute, .. } => attribute,
        }
    }
}

/// One component of a group key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Key {
    Int(i64),
    Text(String),
}

impl Key {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Key::Int(i) => serde_json::Value::from(*i),
            Key::Text(s) => serde_json::Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggRow {
    pub key: Vec<Key>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregateQuery {
    #[serde(default)]
    pub group_by: Vec<GroupBy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    pub agg: AggFn,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<Predicate>,
}

impl AggregateQuery {
    pub fn new(agg: AggFn, measure: Option<&str>, group_by: Vec<GroupBy>) -> Self {
        AggregateQuery {
            group_by,
            measure: measure.map(str::to_string),
            agg,
            filters: Vec::new(),
        }
    }

    pub fn with_filters(mut self, filters: Vec<Predicate>) -> Self {
        self.filters = filters;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRow {
    pub key: Vec<Key>,
    pub current: f64,
    pub previous: f64,
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyChangeRow {
    pub year: i32,
    pub value: f64,
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

// ---------------------------------------------------------------------------
// Predicate compilation

#[derive(Debug)]
enum Test {
    Codes(Vec<u32>),
    TextRange(String, String),
    Numbers(Vec<f64>),
    NumberRange(f64, f64),
    Dates(Vec<NaiveDate>),
    Years(Vec<i32>),
    DateRange(NaiveDate, NaiveDate),
}

#[derive(Debug)]
pub(crate) struct CompiledPredicate {
    column: usize,
    test: Test,
}

impl CompiledPredicate {
    pub(crate) fn matches(&self, ds: &Dataset, row: usize) -> bool {
        match (ds.column_at(self.column), &self.test) {
            (Column::Text(t), Test::Codes(codes)) => t.codes[row].is_some_and(|c| codes.contains(&c)),
            (Column::Text(t), Test::TextRange(lo, hi)) => {
                t.value(row).is_some_and(|v| v >= lo.as_str() && v <= hi.as_str())
            }
            (Column::Number(v), Test::Numbers(set)) => v[row].is_some_and(|x| set.contains(&x)),
            (Column::Number(v), Test::NumberRange(lo, hi)) => v[row].is_some_and(|x| x >= *lo && x <= *hi),
            (Column::Date(v), Test::Dates(set)) => v[row].is_some_and(|d| set.contains(&d)),
            (Column::Date(v), Test::Years(set)) => v[row].is_some_and(|d| set.contains(&d.year())),
            (Column::Date(v), Test::DateRange(lo, hi)) => v[row].is_some_and(|d| d >= *lo && d <= *hi),
            _ => false,
        }
    }
}

enum DateLit {
    Date(NaiveDate),
    Year(i32),
}

fn date_literal(attr: &str, s: &Scalar) -> Result<DateLit, DatasetError> {
    let year_of = |n: f64| {
        if n.fract() == 0.0 && n.abs() < 100_000.0 {
            Some(DateLit::Year(n as i32))
        } else {
            None
        }
    };
    let lit = match s {
        Scalar::Number(n) => year_of(*n),
        Scalar::Text(t) => parse_date(t)
            .map(DateLit::Date)
            .or_else(|| parse_number(t).and_then(year_of)),
    };
    lit.ok_or_else(|| DatasetError::TypeMismatch(format!("`{s:?}` is not a date or year for `{attr}`")))
}

fn number_literal(attr: &str, s: &Scalar) -> Result<f64, DatasetError> {
    match s {
        Scalar::Number(n) => Some(*n),
        Scalar::Text(t) => parse_number(t),
    }
    .ok_or_else(|| DatasetError::TypeMismatch(format!("`{s:?}` is not a number for `{attr}`")))
}

fn compile(ds: &Dataset, p: &Predicate) -> Result<CompiledPredicate, DatasetError> {
    let meta = ds.require(p.attribute())?;
    let column = meta.column_index;
    let attr = meta.name.as_str();
    let test = match (ds.column_at(column), p) {
        (Column::Text(t), Predicate::Eq { value, .. }) => {
            Test::Codes(t.code_of(&value.as_text()).into_iter().collect())
        }
        (Column::Text(t), Predicate::In { values, .. }) => {
            Test::Codes(values.iter().filter_map(|v| t.code_of(&v.as_text())).collect())
        }
        (Column::Text(_), Predicate::Range { min, max, .. }) => Test::TextRange(min.as_text(), max.as_text()),
        (Column::Number(_), Predicate::Eq { value, .. }) => Test::Numbers(vec![number_literal(attr, value)?]),
        (Column::Number(_), Predicate::In { values, .. }) => Test::Numbers(
            values
                .iter()
                .map(|v| number_literal(attr, v))
                .collect::<Result<_, _>>()?,
        ),
        (Column::Number(_), Predicate::Range { min, max, .. }) => {
            Test::NumberRange(number_literal(attr, min)?, number_literal(attr, max)?)
        }
        (Column::Date(_), Predicate::Eq { value, .. }) => match date_literal(attr, value)? {
            DateLit::Date(d) => Test::Dates(vec![d]),
            DateLit::Year(y) => Test::Years(vec![y]),
        },
        (Column::Date(_), Predicate::In { values, .. }) => {
            let mut dates = Vec::new();
            let mut years = Vec::new();
            for v in values {
                match date_literal(attr, v)? {
                    DateLit::Date(d) => dates.push(d),
                    DateLit::Year(y) => years.push(y),
                }
            }
            if !dates.is_empty() && !years.is_empty() {
                return Err(DatasetError::TypeMismatch(format!(
                    "mixed dates and years in predicate on `{attr}`"
                )));
            }
            if years.is_empty() {
                Test::Dates(dates)
            } else {
                Test::Years(years)
            }
        }
        (Column::Date(_), Predicate::Range { min, max, .. }) => {
            let lo = match date_literal(attr, min)? {
                DateLit::Date(d) => d,
                DateLit::Year(y) => NaiveDate::from_ymd_opt(y, 1, 1).unwrap_or(NaiveDate::MIN),
            };
            let hi = match date_literal(attr, max)? {
                DateLit::Date(d) => d,
                DateLit::Year(y) => NaiveDate::from_ymd_opt(y, 12, 31).unwrap_or(NaiveDate::MAX),
            };
            Test::DateRange(lo, hi)
        }
    };
    Ok(CompiledPredicate { column, test })
}

pub(crate) fn compile_filters(ds: &Dataset, filters: &[Predicate]) -> Result<Vec<CompiledPredicate>, DatasetError> {
    filters.iter().map(|p| compile(ds, p)).collect()
}

// ---------------------------------------------------------------------------
// Aggregation

#[derive(Clone, Copy)]
enum KeyPart {
    Code(usize),
    Date(usize, Option<TimeBin>),
}

fn part_column(part: KeyPart) -> usize {
    match part {
        KeyPart::Code(col) | KeyPart::Date(col, _) => col,
    }
}

fn key_parts(ds: &Dataset, group_by: &[GroupBy]) -> Result<Vec<KeyPart>, DatasetError> {
    group_by
        .iter()
        .map(|g| {
            let meta = ds.require(&g.attribute)?;
            match (meta.attr_type, g.bin) {
                (AttrType::Quantitative, _) => Err(DatasetError::TypeMismatch(format!(
                    "cannot group by quantitative attribute `{}`",
                    meta.name
                ))),
                (AttrType::Temporal, bin) => Ok(KeyPart::Date(meta.column_index, bin)),
                (_, Some(_)) => Err(DatasetError::TypeMismatch(format!(
                    "time binning requested on non-temporal attribute `{}`",
                    meta.name
                ))),
                (_, None) => Ok(KeyPart::Code(meta.column_index)),
            }
        })
        .collect()
}

fn raw_key(ds: &Dataset, parts: &[KeyPart], row: usize) -> Option<Vec<i64>> {
    parts
        .iter()
        .map(|part| match *part {
            KeyPart::Code(col) => match ds.column_at(col) {
                Column::Text(t) => t.codes[row].map(i64::from),
                _ => None,
            },
            KeyPart::Date(col, bin) => match ds.column_at(col) {
                Column::Date(v) => v[row].map(|d| match bin {
                    Some(TimeBin::Year) => i64::from(d.year()),
                    Some(TimeBin::Month) => i64::from(d.year()) * 12 + i64::from(d.month0()),
                    Some(TimeBin::Day) | None => i64::from(d.num_days_from_ce()),
                }),
                _ => None,
            },
        })
        .collect()
}

fn decode_key(ds: &Dataset, parts: &[KeyPart], raw: &[i64]) -> Vec<Key> {
    parts
        .iter()
        .zip(raw)
        .map(|(part, &v)| match *part {
            KeyPart::Code(col) => match ds.column_at(col) {
                Column::Text(t) => Key::Text(t.dictionary[v as usize].clone()),
                _ => Key::Int(v),
            },
            KeyPart::Date(_, Some(TimeBin::Year)) => Key::Int(v),
            KeyPart::Date(_, Some(TimeBin::Month)) => {
                Key::Text(format!("{:04}-{:02}", v.div_euclid(12), v.rem_euclid(12) + 1))
            }
            KeyPart::Date(_, _) => Key::Text(
                NaiveDate::from_num_days_from_ce_opt(v as i32)
                    .map(|d| d.format("%Y-%m-%d").to_string())
                    .unwrap_or_default(),
            ),
        })
        .collect()
}

fn measure_column<'a>(ds: &'a Dataset, q: &AggregateQuery) -> Result<Option<&'a [Option<f64>]>, DatasetError> {
    match (&q.measure, q.agg) {
        (None, AggFn::Count) => Ok(None),
        (None, _) => Err(DatasetError::TypeMismatch(format!(
            "{:?} requires a measure",
            q.agg
        ))),
        (Some(name), _) => {
            let meta = ds.require(name)?;
            match ds.column_at(meta.column_index) {
                Column::Number(v) => Ok(Some(v.as_slice())),
                _ if q.agg == AggFn::Count => Err(DatasetError::TypeMismatch(format!(
                    "count measure `{name}` must be quantitative"
                ))),
                _ => Err(DatasetError::TypeMismatch(format!(
                    "cannot {:?} non-quantitative attribute `{name}`",
                    q.agg
                ))),
            }
        }
    }
}

/// Grouped aggregation.
///
/// Rows with a missing group key are skipped. Missing measure cells are
/// excluded, and a group left with no measure values is omitted. Output is
/// ordered by key.
pub fn aggregate(ds: &Dataset, q: &AggregateQuery) -> Result<Vec<AggRow>, DatasetError> {
    let parts = key_parts(ds, &q.group_by)?;
    let measure = measure_column(ds, q)?;
    let filters = compile_filters(ds, &q.filters)?;

    let mut groups: Vec<(Vec<i64>, Acc)> = match dense_radix(ds, &parts) {
        Some(radix) => accumulate_dense(ds, &parts, &radix, measure, &filters),
        None => accumulate_sparse(ds, &parts, measure, &filters),
    };
    groups.retain(|(_, acc)| acc.n > 0);

    let mut out: BTreeMap<Vec<Key>, f64> = BTreeMap::new();
    for (raw, acc) in groups {
        let value = match q.agg {
            AggFn::Sum => acc.sum,
            AggFn::Mean => acc.sum / acc.n as f64,
            AggFn::Count => acc.n as f64,
        };
        out.insert(decode_key(ds, &parts, &raw), value);
    }
    Ok(out.into_iter().map(|(key, value)| AggRow { key, value }).collect())
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    n: usize,
}

impl Acc {
    fn add(&mut self, measure: Option<&[Option<f64>]>, row: usize) {
        match measure {
            Some(values) => {
                if let Some(v) = values[row] {
                    self.sum += v;
                    self.n += 1;
                }
            }
            None => self.n += 1,
        }
    }
}

/// Largest dense group table, in cells.
const DENSE_LIMIT: usize = 1 << 16;

/// Dictionary sizes when every key part is a text code and their product
/// fits a dense table.
fn dense_radix(ds: &Dataset, parts: &[KeyPart]) -> Option<Vec<usize>> {
    let mut cells = 1usize;
    let mut radix = Vec::with_capacity(parts.len());
    for part in parts {
        let KeyPart::Code(col) = *part else { return None };
        let Column::Text(t) = ds.column_at(col) else { return None };
        let n = t.dictionary.len().max(1);
        cells = cells.checked_mul(n).filter(|c| *c <= DENSE_LIMIT)?;
        radix.push(n);
    }
    Some(radix)
}

fn accumulate_dense(
    ds: &Dataset,
    parts: &[KeyPart],
    radix: &[usize],
    measure: Option<&[Option<f64>]>,
    filters: &[CompiledPredicate],
) -> Vec<(Vec<i64>, Acc)> {
    let codes: Vec<&[Option<u32>]> = parts
        .iter()
        .map(|part| match (*part, ds.column_at(part_column(*part))) {
            (KeyPart::Code(_), Column::Text(t)) => t.codes.as_slice(),
            _ => unreachable!("dense keys are text codes"),
        })
        .collect();
    let mut table = vec![Acc::default(); radix.iter().product()];
    let mut seen = vec![false; table.len()];
    'rows: for row in 0..ds.row_count() {
        if !filters.iter().all(|p| p.matches(ds, row)) {
            continue;
        }
        let mut index = 0;
        for (col, &n) in codes.iter().zip(radix) {
            let Some(c) = col[row] else { continue 'rows };
            index = index * n + c as usize;
        }
        seen[index] = true;
        table[index].add(measure, row);
    }
    let mut out = Vec::new();
    for (index, acc) in table.into_iter().enumerate() {
        if !seen[index] {
            continue;
        }
        let mut key = vec![0i64; radix.len()];
        let mut rest = index;
        for (slot, &n) in key.iter_mut().zip(radix).rev() {
            *slot = (rest % n) as i64;
            rest /= n;
        }
        out.push((key, acc));
    }
    out
}

fn accumulate_sparse(
    ds: &Dataset,
    parts: &[KeyPart],
    measure: Option<&[Option<f64>]>,
    filters: &[CompiledPredicate],
) -> Vec<(Vec<i64>, Acc)> {
    let mut groups: HashMap<Vec<i64>, Acc> = HashMap::new();
    for row in 0..ds.row_count() {
        if !filters.iter().all(|p| p.matches(ds, row)) {
            continue;
        }
        let Some(key) = raw_key(ds, parts, row) else {
            continue;
        };
        groups.entry(key).or_default().add(measure, row);
    }
    groups.into_iter().collect()
}

fn require_type(ds: &Dataset, name: &str, ty: AttrType) -> Result<(), DatasetError> {
    let meta = ds.require(name)?;
    if meta.attr_type != ty {
        return Err(DatasetError::TypeMismatch(format!(
            "`{name}` is {}, expected {ty}",
            meta.attr_type
        )));
    }
    Ok(())
}

/// Per-group change of `Sum(measure)` between `year` and `year - 1`.
///
/// A group present in only one of the two years counts as 0 in the other.
pub fn year_over_year_change(
    ds: &Dataset,
    measure: &str,
    temporal: &str,
    group_by: &[String],
    year: i32,
    filters: &[Predicate],
) -> Result<Vec<ChangeRow>, DatasetError> {
    require_type(ds, measure, AttrType::Quantitative)?;
    require_type(ds, temporal, AttrType::Temporal)?;
    let years = ds.years(temporal);
    if years.len() < 2 {
        return Err(DatasetError::SingleYearDataset(temporal.to_string()));
    }
    if !years.contains(&year) || !years.contains(&(year - 1)) {
        return Err(DatasetError::YearOutOfRange {
            attribute: temporal.to_string(),
            year,
        });
    }

    let mut gb: Vec<GroupBy> = group_by.iter().map(GroupBy::new).collect();
    gb.push(GroupBy::binned(temporal, TimeBin::Year));
    let mut all_filters = filters.to_vec();
    all_filters.push(Predicate::Range {
        attribute: temporal.to_string(),
        min: Scalar::from(year - 1),
        max: Scalar::from(year),
    });
    let q = AggregateQuery::new(AggFn::Sum, Some(measure), gb).with_filters(all_filters);

    let mut per_group: BTreeMap<Vec<Key>, (f64, f64)> = BTreeMap::new();
    for mut row in aggregate(ds, &q)? {
        let Some(Key::Int(y)) = row.key.pop() else { continue };
        let entry = per_group.entry(row.key).or_insert((0.0, 0.0));
        if y == i64::from(year) {
            entry.0 += row.value;
        } else {
            entry.1 += row.value;
        }
    }
    Ok(per_group
        .into_iter()
        .map(|(key, (current, previous))| ChangeRow {
            key,
            current,
            previous,
            change: current - previous,
        })
        .collect())
}

/// Year-to-year change of `Sum(measure)` for every year after the first.
pub fn yearly_change(
    ds: &Dataset,
    measure: &str,
    temporal: &str,
    filters: &[Predicate],
) -> Result<Vec<YearlyChangeRow>, DatasetError> {
    require_type(ds, measure, AttrType::Quantitative)?;
    require_type(ds, temporal, AttrType::Temporal)?;
    let years = ds.years(temporal);
    let (Some(&first), Some(&last)) = (years.first(), years.last()) else {
        return Err(DatasetError::SingleYearDataset(temporal.to_string()));
    };
    if years.len() < 2 {
        return Err(DatasetError::SingleYearDataset(temporal.to_string()));
    }
    let q = AggregateQuery::new(
        AggFn::Sum,
        Some(measure),
        vec![GroupBy::binned(temporal, TimeBin::Year)],
    )
    .with_filters(filters.to_vec());
    let sums: HashMap<i64, f64> = aggregate(ds, &q)?
        .into_iter()
        .filter_map(|r| match r.key.first() {
            Some(Key::Int(y)) => Some((*y, r.value)),
            _ => None,
        })
        .collect();
    let value = |y: i32| sums.get(&i64::from(y)).copied().unwrap_or(0.0);
    Ok((first + 1..=last)
        .map(|y| YearlyChangeRow {
            year: y,
            value: value(y),
            change: value(y) - value(y - 1),
        })
        .collect())
}

/// Equal-width histogram over the attribute's full range (independent of filters).
pub fn histogram(
    ds: &Dataset,
    attribute: &str,
    bins: usize,
    filters: &[Predicate],
) -> Result<Vec<HistogramBin>, DatasetError> {
    require_type(ds, attribute, AttrType::Quantitative)?;
    let meta = ds.require(attribute)?;
    let Some((lo, hi)) = meta.numeric_range else {
        return Ok(Vec::new());
    };
    let Column::Number(values) = ds.column_at(meta.column_index) else {
        unreachable!("quantitative attributes are numeric columns")
    };
    let compiled = compile_filters(ds, filters)?;
    let bins = if hi > lo { bins.max(1) } else { 1 };
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 0.0 };
    let mut counts = vec![0usize; bins];
    for (row, v) in values.iter().enumerate() {
        let Some(v) = v else { continue };
        if !compiled.iter().all(|p| p.matches(ds, row)) {
            continue;
        }
        let idx = if width > 0.0 {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            start: lo + width * i as f64,
            end: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count,
        })
        .collect())
}

/// Raw `(x, y)` pairs with rows missing either value dropped.
pub fn scatter_pairs(
    ds: &Dataset,
    x: &str,
    y: &str,
    filters: &[Predicate],
) -> Result<Vec<(usize, f64, f64)>, DatasetError> {
    require_type(ds, x, AttrType::Quantitative)?;
    require_type(ds, y, AttrType::Quantitative)?;
    let compiled = compile_filters(ds, filters)?;
    let (Some(Column::Number(xs)), Some(Column::Number(ys))) = (ds.column(x), ds.column(y)) else {
        unreachable!("quantitative attributes are numeric columns")
    };
    Ok(xs
        .iter()
        .zip(ys)
        .enumerate()
        .filter_map(|(row, (a, b))| Some((row, (*a)?, (*b)?)))
        .filter(|(row, _, _)| compiled.iter().all(|p| p.matches(ds, *row)))
        .collect())
}
