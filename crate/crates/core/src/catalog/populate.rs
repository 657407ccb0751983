use std::collections::HashSet;

use super::{placeholders, slot_compatible, AttributeAssignment, Collection, CollectionTemplate, SlotRef, WindowRecipe};
use crate::canvas::{TimeWindow, ViewSpec, WidgetSpec};
use crate::dataset::{AggFn, AttrType, Dataset};

/// Label used in objectives when a count-fallback measure is skipped.
pub const RECORD_COUNT_LABEL: &str = "Number of records";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PopulateError {
    #[error("invalid assignment for `{code}`: {message}")]
    InvalidAssignment { code: String, message: String },
}

/// Instantiates a template with concrete attributes.
///
/// Recipes that reference a skipped slot are dropped, except that a skipped
/// count-fallback measure turns the view into a record count. Widgets are
/// kept only when their slot is bound.
pub fn populate_collection(
    template: &CollectionTemplate,
    assignment: &AttributeAssignment,
    ds: &Dataset,
) -> Result<Collection, PopulateError> {
    let fail = |message: String| PopulateError::InvalidAssignment {
        code: template.code.clone(),
        message,
    };

    let mut seen = HashSet::new();
    for (id, attrs) in &assignment.0 {
        let slot = template
            .slot(id)
            .ok_or_else(|| fail(format!("undeclared slot `{id}`")))?;
        if attrs.len() > slot.multiplicity {
            return Err(fail(format!("slot `{id}` holds {} attributes", attrs.len())));
        }
        for a in attrs {
            let meta = ds
                .attribute(a)
                .ok_or_else(|| fail(format!("unknown attribute `{a}`")))?;
            if !slot_compatible(slot, meta, ds) {
                return Err(fail(format!("`{a}` cannot fill slot `{id}`")));
            }
            if !seen.insert(a.as_str()) {
                return Err(fail(format!("`{a}` is bound twice")));
            }
        }
    }
    for slot in template.primary_slots() {
        if assignment.slot(&slot.id).len() != slot.multiplicity {
            return Err(fail(format!("primary slot `{}` is not filled", slot.id)));
        }
    }

    let change_year = |t: &str| -> Option<i32> {
        let years = ds.years(t);
        years.iter().rev().copied().find(|y| years.contains(&(y - 1)))
    };

    let mut views = Vec::new();
    let mut view_recipes = Vec::new();
    'recipes: for (i, recipe) in template.views.iter().enumerate() {
        let mut agg = recipe.agg;
        let mut measures = Vec::new();
        for r in &recipe.measures {
            match assignment.get(r) {
                Some(a) => measures.push(a.to_string()),
                None if template.slot(&r.slot).is_some_and(|s| s.count_fallback) => agg = AggFn::Count,
                None => continue 'recipes,
            }
        }
        let mut dimensions = Vec::new();
        for r in &recipe.dimensions {
            match assignment.get(r) {
                Some(a) => dimensions.push(a.to_string()),
                None => continue 'recipes,
            }
        }
        let temporal = match &recipe.temporal {
            Some(r) => match assignment.get(r) {
                Some(a) => Some(a.to_string()),
                None => continue 'recipes,
            },
            None => None,
        };
        let window = match (recipe.window, temporal.as_deref()) {
            (None, _) => None,
            (Some(_), None) => continue 'recipes,
            (Some(WindowRecipe::LatestYear), Some(t)) => match ds.latest_year(t) {
                Some(year) => Some(TimeWindow::Year { year }),
                None => continue 'recipes,
            },
            (Some(WindowRecipe::YearOverYear), Some(t)) => match change_year(t) {
                Some(year) => Some(TimeWindow::YearOverYear { year }),
                None => continue 'recipes,
            },
            (Some(WindowRecipe::YearlyChange), Some(_)) => Some(TimeWindow::YearlyChange),
        };
        let view = ViewSpec {
            kind: recipe.kind,
            measures,
            dimensions,
            temporal,
            agg,
            window,
            limit: recipe.limit,
        };
        if view.validate(ds).is_err() {
            continue;
        }
        views.push(view);
        view_recipes.push(i);
    }
    if views.is_empty() {
        return Err(fail("no view can be built".into()));
    }

    let widgets = template
        .widgets
        .iter()
        .filter_map(|w| assignment.get(&w.slot).map(|a| WidgetSpec::new(w.kind, a)))
        .collect();

    let primary_attributes = template
        .primary_slots()
        .filter(|s| s.slot_type != AttrType::Temporal)
        .flat_map(|s| assignment.slot(&s.id).iter().cloned())
        .collect();

    let year = template
        .slots
        .iter()
        .filter(|s| s.slot_type == AttrType::Temporal)
        .find_map(|s| assignment.slot(&s.id).first())
        .and_then(|t| change_year(t).or_else(|| ds.latest_year(t)));

    Ok(Collection {
        code: template.code.clone(),
        intent: template.intent,
        objective: render_objective(template, assignment, year),
        assignment: assignment.clone(),
        primary_attributes,
        views,
        view_recipes,
        widgets,
    })
}

fn render_objective(template: &CollectionTemplate, assignment: &AttributeAssignment, year: Option<i32>) -> String {
    let mut text = template.objective.clone();
    for name in placeholders(&template.objective) {
        let value = match name {
            "year" => year.map(|y| y.to_string()),
            "prev_year" => year.map(|y| (y - 1).to_string()),
            _ => {
                let r: SlotRef = name.parse().expect("validated placeholder");
                assignment.get(&r).map(str::to_string).or_else(|| {
                    template
                        .slot(&r.slot)
                        .filter(|s| s.count_fallback)
                        .map(|_| RECORD_COUNT_LABEL.to_string())
                })
            }
        };
        if let Some(v) = value {
            text = text.replacen(&format!("{{{name}}}"), &v, 1);
        }
    }
    text
}
