//! Statistical interestingness of candidate views.
//!
//! Each chart kind is scored with one metric: spread of the aggregated values
//! (bars, maps, histograms, heatmaps), strength of correlation (scatter) or
//! the number of peaks and drops (line). Raw scores live on metric-specific
//! scales; [`normalize_across_sets`] puts scores for the same view slot on a
//! common `[0, 1]` scale.

use serde::{Deserialize, Serialize};

use crate::canvas::{ChartKind, ViewSpec};
use crate::dataset::{AttrType, AttributeMeta, Dataset, DatasetError};
use crate::viewdata::{self, ViewData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    StdDev,
    Pearson,
    PeakDrop,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestingnessScore {
    pub raw: f64,
    pub normalized: f64,
    pub metric: Metric,
}

impl InterestingnessScore {
    /// Score with only the raw value known; normalized is neutral until
    /// compared against other candidates.
    pub fn raw(metric: Metric, raw: f64) -> Self {
        InterestingnessScore {
            raw,
            normalized: 0.5,
            metric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricParams {
    pub lag: usize,
    pub threshold: f64,
    pub influence: f64,
    /// Largest cardinality shown without penalty.
    pub penalty_cardinality: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            lag: 5,
            threshold: 3.0,
            influence: 0.5,
            penalty_cardinality: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("series of length {len} is too short for lag {lag}")]
    SeriesTooShort { len: usize, lag: usize },
}

/// Population standard deviation; 0 for fewer than two values.
pub fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Pearson product-moment correlation. Zero when either side has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Counts peaks and drops with the smoothed z-score detector.
///
/// The first `lag` points seed the window. A later point is flagged when it
/// deviates from the window mean by more than `threshold` window standard
/// deviations; flagged points enter the window as
/// `influence * x + (1 - influence) * previous`. Each maximal run of flagged
/// points counts once.
pub fn smoothed_z_score_peaks(
    series: &[f64],
    lag: usize,
    threshold: f64,
    influence: f64,
) -> Result<usize, MetricError> {
    if lag < 2 || series.len() <= lag {
        return Err(MetricError::SeriesTooShort {
            len: series.len(),
            lag,
        });
    }
    let mut filtered = series.to_vec();
    let (mut mean, mut sd) = window_stats(&filtered[..lag]);
    let mut runs = 0;
    let mut in_run = false;
    for i in lag..series.len() {
        let dev = (series[i] - mean).abs();
        let bound = threshold * sd;
        // Slack absorbs rounding so a flat window never flags itself.
        let flagged = dev > bound && dev - bound > 1e-9 * (1.0 + mean.abs());
        if flagged {
            filtered[i] = influence * series[i] + (1.0 - influence) * filtered[i - 1];
            if !in_run {
                runs += 1;
            }
        }
        in_run = flagged;
        (mean, sd) = window_stats(&filtered[i + 1 - lag..=i]);
    }
    Ok(runs)
}

fn window_stats(w: &[f64]) -> (f64, f64) {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Down-weights high-cardinality dimensions unless the user selected them.
pub fn cardinality_penalty(attr: &AttributeMeta, explicit: bool, params: &MetricParams) -> f64 {
    penalty_for(attr.cardinality, explicit, params.penalty_cardinality)
}

pub fn penalty_for(cardinality: usize, explicit: bool, threshold: usize) -> f64 {
    if explicit || cardinality <= threshold {
        1.0
    } else {
        threshold as f64 / cardinality as f64
    }
}

/// Min-max rescale to `[0, 1]`; a degenerate range maps everything to 0.5.
pub fn normalize_across_sets(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.5; raw.len()];
    }
    raw.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

pub fn metric_for(kind: ChartKind) -> Metric {
    match kind {
        ChartKind::DataSummary => Metric::None,
        ChartKind::Scatter => Metric::Pearson,
        ChartKind::Line => Metric::PeakDrop,
        _ => Metric::StdDev,
    }
}

/// Raw interestingness of a view, including cardinality penalties.
pub fn raw_interestingness(
    view: &ViewSpec,
    ds: &Dataset,
    explicit: &[String],
    params: &MetricParams,
) -> Result<InterestingnessScore, DatasetError> {
    let data = viewdata::compute(ds, view, &[])?;
    Ok(score_data(view, &data, ds, explicit, params))
}

/// Scores already-computed view data.
pub fn score_data(
    view: &ViewSpec,
    data: &ViewData,
    ds: &Dataset,
    explicit: &[String],
    params: &MetricParams,
) -> InterestingnessScore {
    let metric = metric_for(view.kind);
    let base = match (metric, data) {
        (Metric::None, _) => return InterestingnessScore::raw(Metric::None, 0.0),
        (Metric::Pearson, ViewData::Points { points }) => {
            let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.2).collect();
            pearson(&xs, &ys).map_or(0.0, f64::abs)
        }
        (Metric::PeakDrop, ViewData::Groups { rows }) => {
            let mut names: Vec<Option<&str>> = Vec::new();
            for r in rows {
                if !names.contains(&r.series.as_deref()) {
                    names.push(r.series.as_deref());
                }
            }
            names
                .into_iter()
                .map(|s| {
                    let series: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.series.as_deref() == s)
                        .map(|r| r.value)
                        .collect();
                    smoothed_z_score_peaks(&series, params.lag, params.threshold, params.influence)
                        .unwrap_or(0)
                })
                .sum::<usize>() as f64
        }
        (_, data) => population_std(&data.values()),
    };
    InterestingnessScore::raw(metric, base * view_penalty(view, ds, explicit, params))
}

/// Product of the cardinality penalties of the view's categorical and
/// geographic encodings.
pub fn view_penalty(view: &ViewSpec, ds: &Dataset, explicit: &[String], params: &MetricParams) -> f64 {
    view.dimensions
        .iter()
        .filter_map(|d| ds.attribute(d))
        .filter(|a| matches!(a.attr_type, AttrType::Categorical | AttrType::Geographic))
        .map(|a| {
            let card = view.limit.map_or(a.cardinality, |n| a.cardinality.min(n));
            penalty_for(card, explicit.contains(&a.name), params.penalty_cardinality)
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_csv, AggFn, CsvOptions};

    #[test]
    fn std_examples() {
        assert_eq!(population_std(&[5.0, 5.0, 5.0]), 0.0);
        assert_eq!(population_std(&[0.0, 10.0]), 5.0);
        assert_eq!(population_std(&[4.0]), 0.0);
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Ok(1.0));
        assert_eq!(pearson(&[1.0, 2.0], &[2.0, 1.0]), Ok(-1.0));
        assert_eq!(pearson(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]), Ok(0.0));
        assert_eq!(pearson(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch(1, 2)));
    }

    #[test]
    fn z_score_examples() {
        let flat = vec![4.0; 30];
        assert_eq!(smoothed_z_score_peaks(&flat, 5, 3.0, 0.5), Ok(0));
        let mut spike = flat.clone();
        spike[15] = 40.0;
        assert_eq!(smoothed_z_score_peaks(&spike, 5, 3.0, 0.5), Ok(1));
        let ramp: Vec<f64> = (0..30).map(f64::from).collect();
        assert_eq!(smoothed_z_score_peaks(&ramp, 5, 3.0, 0.5), Ok(0));
        assert!(matches!(
            smoothed_z_score_peaks(&[1.0; 5], 5, 3.0, 0.5),
            Err(MetricError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn adjacent_flags_count_once() {
        let mut s = vec![0.0; 20];
        s[10] = 100.0;
        s[11] = 100.0;
        s[12] = 100.0;
        assert_eq!(smoothed_z_score_peaks(&s, 5, 3.0, 0.5), Ok(1));
    }

    #[test]
    fn penalty_examples() {
        assert!((penalty_for(500, false, 12) - 0.024).abs() < 1e-15);
        assert_eq!(penalty_for(500, true, 12), 1.0);
        assert_eq!(penalty_for(3, false, 12), 1.0);
        assert_eq!(penalty_for(12, false, 12), 1.0);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_across_sets(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_across_sets(&[7.0, 7.0, 7.0]), vec![0.5; 3]);
        assert_eq!(normalize_across_sets(&[3.0]), vec![0.5]);
    }

    #[test]
    fn view_scores() {
        let ds = load_csv(
            b"x,y,g\n1,1,a\n2,2,a\n3,3,b\n",
            CsvOptions::default(),
        )
        .unwrap();
        let p = MetricParams::default();
        let scatter = ViewSpec::new(ChartKind::Scatter, AggFn::Sum).measure("x").measure("y");
        let s = raw_interestingness(&scatter, &ds, &[], &p).unwrap();
        assert_eq!((s.metric, s.raw), (Metric::Pearson, 1.0));

        // Sums by g: a=3, b=3.
        let bar = ViewSpec::new(ChartKind::Bar, AggFn::Sum).measure("x").dimension("g");
        let s = raw_interestingness(&bar, &ds, &[], &p).unwrap();
        assert_eq!((s.metric, s.raw), (Metric::StdDev, 0.0));

        let summary = ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("x");
        let s = raw_interestingness(&summary, &ds, &[], &p).unwrap();
        assert_eq!((s.metric, s.normalized), (Metric::None, 0.5));
    }
}
