//! The table of values a view draws, computed from the dataset.
//!
//! Interestingness scores and emitted chart specs both read this table, so a
//! score always describes exactly the data the chart shows.

use serde::Serialize;

use crate::canvas::{ChartKind, TimeWindow, ViewSpec};
use crate::dataset::{
    aggregate, histogram, scatter_pairs, year_over_year_change, yearly_change, AggregateQuery,
    Dataset, DatasetError, GroupBy, HistogramBin, Key, Predicate, Scalar, TimeBin,
};

/// Bin count used for histograms.
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupRow {
    pub key: Vec<Key>,
    /// Measure name when the view plots more than one measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub value: f64,
    /// Previous-period value for change views.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub previous: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "camelCase")]
pub enum ViewData {
    /// A single aggregate. `previous` is set for change summaries, and then
    /// `value` is the change.
    Value { value: Option<f64>, previous: Option<f64> },
    Groups { rows: Vec<GroupRow> },
    Bins { bins: Vec<HistogramBin> },
    /// Raw `(row, x, y)` triples.
    Points { points: Vec<(usize, f64, f64)> },
}

impl ViewData {
    /// The numbers whose spread the view shows.
    pub fn values(&self) -> Vec<f64> {
        match self {
            ViewData::Value { value, .. } => value.iter().copied().collect(),
            ViewData::Groups { rows } => rows.iter().map(|r| r.value).collect(),
            ViewData::Bins { bins } => bins.iter().map(|b| b.count as f64).collect(),
            ViewData::Points { points } => points.iter().map(|p| p.2).collect(),
        }
    }
}

/// Computes the view's data under additional row filters.
pub fn compute(ds: &Dataset, view: &ViewSpec, filters: &[Predicate]) -> Result<ViewData, DatasetError> {
    let mut filters = filters.to_vec();
    if let (Some(TimeWindow::Year { year }), Some(t)) = (view.window, &view.temporal) {
        filters.push(Predicate::Range {
            attribute: t.clone(),
            min: Scalar::from(year),
            max: Scalar::from(year),
        });
    }
    let measure = view.measures.first().map(String::as_str);

    match (view.kind, view.window) {
        (ChartKind::Histogram, _) => Ok(ViewData::Bins {
            bins: histogram(ds, &view.measures[0], HISTOGRAM_BINS, &filters)?,
        }),
        (ChartKind::Scatter, _) => Ok(ViewData::Points {
            points: scatter_pairs(ds, &view.measures[0], &view.measures[1], &filters)?,
        }),
        (_, Some(TimeWindow::YearOverYear { year })) => {
            let temporal = temporal_of(view)?;
            let rows = year_over_year_change(ds, measure_of(view)?, temporal, &view.dimensions, year, &filters)?;
            if view.kind == ChartKind::DataSummary {
                let (cur, prev) = rows
                    .iter()
                    .fold((0.0, 0.0), |(c, p), r| (c + r.current, p + r.previous));
                return Ok(ViewData::Value {
                    value: Some(cur - prev),
                    previous: Some(prev),
                });
            }
            let rows = rows
                .into_iter()
                .map(|r| GroupRow {
                    key: r.key,
                    series: None,
                    value: r.change,
                    previous: Some(r.previous),
                })
                .collect();
            Ok(ViewData::Groups {
                rows: apply_limit(rows, view.limit),
            })
        }
        (_, Some(TimeWindow::YearlyChange)) => {
            let rows = yearly_change(ds, measure_of(view)?, temporal_of(view)?, &filters)?
                .into_iter()
                .map(|r| GroupRow {
                    key: vec![Key::Int(i64::from(r.year))],
                    series: None,
                    value: r.change,
                    previous: Some(r.value - r.change),
                })
                .collect();
            Ok(ViewData::Groups { rows })
        }
        (ChartKind::DataSummary, _) => {
            let q = AggregateQuery::new(view.agg, measure, Vec::new()).with_filters(filters);
            let value = aggregate(ds, &q)?.first().map(|r| r.value);
            Ok(ViewData::Value { value, previous: None })
        }
        _ => {
            let group_by: Vec<GroupBy> = match &view.temporal {
                Some(t) if view.kind == ChartKind::Line => vec![GroupBy::binned(t.clone(), TimeBin::Month)],
                _ => view.dimensions.iter().map(GroupBy::new).collect(),
            };
            let series = view.measures.len() > 1;
            let mut rows = Vec::new();
            let measures: Vec<Option<&str>> = if view.measures.is_empty() {
                vec![None]
            } else {
                view.measures.iter().map(|m| Some(m.as_str())).collect()
            };
            for m in measures {
                let q = AggregateQuery::new(view.agg, m, group_by.clone()).with_filters(filters.clone());
                rows.extend(aggregate(ds, &q)?.into_iter().map(|r| GroupRow {
                    key: r.key,
                    series: if series { m.map(str::to_string) } else { None },
                    value: r.value,
                    previous: None,
                }));
            }
            Ok(ViewData::Groups {
                rows: apply_limit(rows, view.limit),
            })
        }
    }
}

fn measure_of(view: &ViewSpec) -> Result<&str, DatasetError> {
    view.measures
        .first()
        .map(String::as_str)
        .ok_or_else(|| DatasetError::TypeMismatch(format!("{} view has no measure", view.kind)))
}

fn temporal_of(view: &ViewSpec) -> Result<&str, DatasetError> {
    view.temporal
        .as_deref()
        .ok_or_else(|| DatasetError::TypeMismatch(format!("{} view has no temporal attribute", view.kind)))
}

/// Keeps the `n` largest groups, preserving key order among them.
fn apply_limit(rows: Vec<GroupRow>, limit: Option<usize>) -> Vec<GroupRow> {
    let Some(n) = limit else { return rows };
    if rows.len() <= n {
        return rows;
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    // Stable: equal values keep key order.
    order.sort_by(|&a, &b| rows[b].value.total_cmp(&rows[a].value));
    let mut keep = vec![false; rows.len()];
    for &i in &order[..n] {
        keep[i] = true;
    }
    rows.into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect()
}
