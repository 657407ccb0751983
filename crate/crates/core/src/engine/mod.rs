//! Collection recommendation.
//!
//! One pass takes the dataset, the catalog, the user's selections and the
//! current canvas, and returns one ranked collection per satisfiable template:
//!
//! 1. Attributes of interest are the explicit selections followed by the
//!    attributes encoded by canvas views.
//! 2. Templates are filtered by the selected intents (all four when none).
//! 3. Each template enumerates candidate attribute sets and keeps the one
//!    whose views are most interesting on average ([`select_display_set`]).
//! 4. Collections are ordered by relevance (attribute match plus canvas
//!    coverage), and views inside each collection by overlap with the
//!    attributes of interest.
//!
//! With no selections and an empty canvas the order is instead round-robin
//! over intents so the first screen shows one collection of each kind.
//!
//! The engine holds no state. Identical inputs give identical output.

mod rank;
mod select;

use serde::{Deserialize, Serialize};

use crate::canvas::CanvasState;
use crate::catalog::{enumerate_attribute_sets, Catalog, Collection, EnumerationContext, Intent};
use crate::config::{AttrMatchMode, EngineConfig};
use crate::dataset::Dataset;

pub use rank::{attr_match, attr_match_jaccard, compare_ranked, coverage, rank_views, RankedView};
pub use select::{select_display_set, DisplaySelection, ScoreCache};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserInput {
    #[serde(default)]
    pub explicit_attrs: Vec<String>,
    /// Empty means every intent.
    #[serde(default)]
    pub intents: Vec<Intent>,
}

impl UserInput {
    pub fn new(explicit: &[&str], intents: &[Intent]) -> Self {
        UserInput {
            explicit_attrs: explicit.iter().map(|s| s.to_string()).collect(),
            intents: intents.to_vec(),
        }
    }

    /// Drops duplicate attributes and intents, keeping first occurrences.
    pub fn normalized(mut self) -> Self {
        let mut seen = Vec::new();
        self.explicit_attrs.retain(|a| {
            let fresh = !seen.contains(a);
            seen.push(a.clone());
            fresh
        });
        let mut intents = Vec::new();
        for i in self.intents {
            if !intents.contains(&i) {
                intents.push(i);
            }
        }
        self.intents = intents;
        self
    }

    pub fn validate(&self, ds: &Dataset) -> Result<(), EngineError> {
        match self.explicit_attrs.iter().find(|a| ds.attribute(a).is_none()) {
            Some(a) => Err(EngineError::UnknownAttribute(a.clone())),
            None => Ok(()),
        }
    }

    pub fn selects(&self, intent: Intent) -> bool {
        self.intents.is_empty() || self.intents.contains(&intent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrsOfInterest {
    pub explicit: Vec<String>,
    /// Canvas-derived attributes that are not explicit.
    pub implicit: Vec<String>,
    /// `explicit` followed by `implicit`.
    pub union: Vec<String>,
}

impl AttrsOfInterest {
    pub fn new(explicit: &[String], canvas: &CanvasState) -> Self {
        let implicit: Vec<String> = implicit_attributes(canvas)
            .into_iter()
            .filter(|a| !explicit.contains(a))
            .collect();
        let mut union = explicit.to_vec();
        union.extend(implicit.iter().cloned());
        AttrsOfInterest {
            explicit: explicit.to_vec(),
            implicit,
            union,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.union.is_empty()
    }
}

/// Attributes encoded by canvas views (not widgets), in first-appearance order.
pub fn implicit_attributes(canvas: &CanvasState) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in canvas.views() {
        for a in v.attributes() {
            if !out.iter().any(|o| o == a) {
                out.push(a.to_string());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedCollection {
    pub collection: Collection,
    pub relevance: f64,
    pub attr_match: f64,
    pub coverage: f64,
    pub explicit_match: f64,
    pub mean_interestingness: f64,
    pub ranked_views: Vec<RankedView>,
    /// Attribute sets enumerated before the display set was chosen.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendations {
    pub collections: Vec<RankedCollection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    /// Whether the intent round-robin order was used.
    pub round_robin: bool,
}

/// Diagnostic code for a pass where no template could be generated.
pub const NO_SATISFIABLE_TEMPLATE: &str = "NoSatisfiableTemplate";

/// Runs one recommendation pass.
pub fn recommend_collections(
    ds: &Dataset,
    catalog: &Catalog,
    input: &UserInput,
    canvas: &CanvasState,
    config: &EngineConfig,
) -> Result<Recommendations, EngineError> {
    input.validate(ds)?;
    let input = input.clone().normalized();
    let attrs = AttrsOfInterest::new(&input.explicit_attrs, canvas);
    let ctx = EnumerationContext {
        dataset: ds,
        interest: &attrs.union,
        explicit: &attrs.explicit,
        params: &config.metrics,
        cap: config.enumeration_cap,
    };

    let mut cache = ScoreCache::new();
    let mut ranked: Vec<(usize, RankedCollection)> = Vec::new();
    let mut diagnostics = Vec::new();
    for (pos, template) in catalog.templates().iter().enumerate() {
        if !input.selects(template.intent) {
            continue;
        }
        let candidates = enumerate_attribute_sets(template, &ctx);
        let selection = select_display_set(
            template,
            &candidates,
            ds,
            &attrs.explicit,
            &config.metrics,
            &mut cache,
        );
        let Some(selection) = selection else {
            diagnostics.push(Diagnostic {
                code: template.code.clone(),
                message: "primary attributes cannot be filled from this dataset".into(),
            });
            continue;
        };
        let collection = selection.collection;
        let (proportion, explicit_match) = attr_match(&collection, &attrs);
        let matched = match config.attr_match {
            AttrMatchMode::Proportion => proportion,
            AttrMatchMode::Jaccard => attr_match_jaccard(template, &collection, &attrs),
        };
        let cov = coverage(&collection, canvas);
        let ranked_views = rank_views(&collection, &selection.scores, &attrs, canvas);
        ranked.push((
            pos,
            RankedCollection {
                relevance: matched + cov,
                attr_match: matched,
                coverage: cov,
                explicit_match,
                mean_interestingness: selection.mean_interestingness,
                ranked_views,
                candidates: candidates.len(),
                collection,
            },
        ));
    }

    if ranked.is_empty() {
        diagnostics.push(Diagnostic {
            code: NO_SATISFIABLE_TEMPLATE.into(),
            message: "no selected template can be generated from this dataset".into(),
        });
    }

    let round_robin = attrs.is_empty() && canvas.is_empty();
    let collections = if round_robin {
        round_robin_order(ranked)
    } else {
        ranked.sort_by(|(pa, a), (pb, b)| {
            compare_ranked(
                (a.relevance, a.explicit_match, a.mean_interestingness, *pa),
                (b.relevance, b.explicit_match, b.mean_interestingness, *pb),
            )
        });
        ranked.into_iter().map(|(_, c)| c).collect()
    };
    Ok(Recommendations {
        collections,
        diagnostics,
        round_robin,
    })
}

/// One collection per intent (Distribution, Measure, Category, Change), each
/// the most interesting of its intent, then the rest by interestingness.
fn round_robin_order(ranked: Vec<(usize, RankedCollection)>) -> Vec<RankedCollection> {
    let by_interest = |a: &(usize, RankedCollection), b: &(usize, RankedCollection)| {
        b.1.mean_interestingness
            .total_cmp(&a.1.mean_interestingness)
            .then(a.0.cmp(&b.0))
    };
    let mut rest = ranked;
    rest.sort_by(by_interest);
    let mut head = Vec::new();
    for intent in Intent::ROUND_ROBIN {
        if let Some(i) = rest.iter().position(|(_, c)| c.collection.intent == intent) {
            head.push(rest.remove(i));
        }
    }
    head.into_iter().chain(rest).map(|(_, c)| c).collect()
}

#[cfg(test)]
mod tests;
