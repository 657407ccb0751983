use std::collections::HashMap;

use crate::canvas::ViewSpec;
use crate::catalog::{populate_collection, AttributeAssignment, Collection, CollectionTemplate};
use crate::dataset::Dataset;
use crate::interestingness::{normalize_across_sets, raw_interestingness, InterestingnessScore, Metric, MetricParams};

/// Raw scores of views already computed in one recommendation pass.
#[derive(Debug, Default)]
pub struct ScoreCache {
    scores: HashMap<ViewSpec, InterestingnessScore>,
    computed: usize,
}

impl ScoreCache {
    pub fn new() -> Self {
        ScoreCache::default()
    }

    /// Raw score of a view; unscorable views score 0 on their metric.
    pub fn raw(&mut self, view: &ViewSpec, ds: &Dataset, explicit: &[String], params: &MetricParams) -> InterestingnessScore {
        if let Some(s) = self.scores.get(view) {
            return *s;
        }
        self.computed += 1;
        let score = raw_interestingness(view, ds, explicit, params).unwrap_or_else(|_| {
            InterestingnessScore::raw(crate::interestingness::metric_for(view.kind), 0.0)
        });
        self.scores.insert(view.clone(), score);
        score
    }

    /// Number of distinct views scored so far.
    pub fn computed(&self) -> usize {
        self.computed
    }
}

/// The attribute set a collection displays.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplaySelection {
    /// Index into the candidate list.
    pub index: usize,
    pub collection: Collection,
    /// Per view, with normalized scores filled in.
    pub scores: Vec<InterestingnessScore>,
    pub mean_interestingness: f64,
}

/// Picks the candidate whose views have the highest mean normalized
/// interestingness.
///
/// Raw scores are normalized per view recipe across the candidates that
/// produce that view. Views without a metric count as 0.5. Ties go to the
/// earliest candidate. Returns `None` when no candidate populates.
pub fn select_display_set(
    template: &CollectionTemplate,
    candidates: &[AttributeAssignment],
    ds: &Dataset,
    explicit: &[String],
    params: &MetricParams,
    cache: &mut ScoreCache,
) -> Option<DisplaySelection> {
    let populated: Vec<(usize, Collection)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, a)| populate_collection(template, a, ds).ok().map(|c| (i, c)))
        .collect();
    if populated.is_empty() {
        return None;
    }

    let mut raws: Vec<Vec<InterestingnessScore>> = populated
        .iter()
        .map(|(_, c)| c.views.iter().map(|v| cache.raw(v, ds, explicit, params)).collect())
        .collect();

    for recipe in 0..template.views.len() {
        let mut cells = Vec::new();
        for (ci, (_, c)) in populated.iter().enumerate() {
            if let Some(vi) = c.view_recipes.iter().position(|&r| r == recipe) {
                cells.push((ci, vi));
            }
        }
        let values: Vec<f64> = cells.iter().map(|&(ci, vi)| raws[ci][vi].raw).collect();
        for (&(ci, vi), n) in cells.iter().zip(normalize_across_sets(&values)) {
            let s = &mut raws[ci][vi];
            s.normalized = if s.metric == Metric::None { 0.5 } else { n };
        }
    }

    let mut best: Option<(usize, f64)> = None;
    for (ci, scores) in raws.iter().enumerate() {
        let mean = scores.iter().map(|s| s.normalized).sum::<f64>() / scores.len() as f64;
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((ci, mean));
        }
    }
    let (ci, mean) = best.expect("at least one candidate");
    let scores = raws.swap_remove(ci);
    let (index, collection) = populated.into_iter().nth(ci).expect("index in range");
    Some(DisplaySelection {
        index,
        collection,
        scores,
        mean_interestingness: mean,
    })
}
