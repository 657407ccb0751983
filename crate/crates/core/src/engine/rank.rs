use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::AttrsOfInterest;
use crate::canvas::{CanvasState, ViewSpec};
use crate::catalog::{Collection, CollectionTemplate};
use crate::interestingness::InterestingnessScore;

/// `(match, explicitMatch)` of a collection's primary attributes.
pub fn attr_match(collection: &Collection, attrs: &AttrsOfInterest) -> (f64, f64) {
    let p = &collection.primary_attributes;
    if p.is_empty() {
        return (0.0, 0.0);
    }
    let n = p.len() as f64;
    let hits = p.iter().filter(|a| attrs.union.contains(a)).count() as f64;
    let explicit = p.iter().filter(|a| attrs.explicit.contains(a)).count() as f64;
    (hits / n, explicit / n)
}

/// Jaccard variant: all primary attributes, including temporal ones, against
/// the explicit attributes (or the implicit ones when nothing is selected).
pub fn attr_match_jaccard(template: &CollectionTemplate, collection: &Collection, attrs: &AttrsOfInterest) -> f64 {
    let p: Vec<&String> = template
        .primary_slots()
        .flat_map(|s| collection.assignment.slot(&s.id))
        .collect();
    let u = if attrs.explicit.is_empty() {
        &attrs.implicit
    } else {
        &attrs.explicit
    };
    let inter = p.iter().filter(|a| u.contains(a)).count();
    let union = p.len() + u.iter().filter(|a| !p.contains(a)).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Share of a collection's views already on the canvas; 0 when none are
/// missing from it or the canvas is empty.
pub fn coverage(collection: &Collection, canvas: &CanvasState) -> f64 {
    if collection.views.is_empty() {
        return 0.0;
    }
    let present = collection.views.iter().filter(|v| canvas.contains_view(v)).count();
    if present == collection.views.len() {
        return 0.0;
    }
    present as f64 / collection.views.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedView {
    pub view: ViewSpec,
    /// Recipe index within the template.
    pub recipe: usize,
    pub interestingness: InterestingnessScore,
    /// Attributes shared with the attributes of interest.
    pub attr_overlap: usize,
    pub explicit_overlap: usize,
    pub in_canvas: bool,
}

/// Orders a collection's views: off-canvas first, then by overlap with the
/// attributes of interest, then by overlap with explicit attributes, then
/// recipe order.
pub fn rank_views(
    collection: &Collection,
    scores: &[InterestingnessScore],
    attrs: &AttrsOfInterest,
    canvas: &CanvasState,
) -> Vec<RankedView> {
    let mut views: Vec<RankedView> = collection
        .views
        .iter()
        .zip(&collection.view_recipes)
        .zip(scores)
        .map(|((v, &recipe), &interestingness)| {
            let attributes = v.attributes();
            RankedView {
                view: v.clone(),
                recipe,
                interestingness,
                attr_overlap: attributes.iter().filter(|a| attrs.union.iter().any(|u| u == *a)).count(),
                explicit_overlap: attributes.iter().filter(|a| attrs.explicit.iter().any(|u| u == *a)).count(),
                in_canvas: canvas.contains_view(v),
            }
        })
        .collect();
    views.sort_by(|a, b| {
        a.in_canvas
            .cmp(&b.in_canvas)
            .then(b.attr_overlap.cmp(&a.attr_overlap))
            .then(b.explicit_overlap.cmp(&a.explicit_overlap))
            .then(a.recipe.cmp(&b.recipe))
    });
    views
}

/// Sort order of ranked collections: relevance, explicit match and mean
/// interestingness descending, then catalog position.
pub fn compare_ranked(a: (f64, f64, f64, usize), b: (f64, f64, f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(b.1.total_cmp(&a.1))
        .then(b.2.total_cmp(&a.2))
        .then(a.3.cmp(&b.3))
}
