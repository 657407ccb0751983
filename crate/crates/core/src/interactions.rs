//! Interaction links between canvas elements.
//!
//! A link is valid unless its source is a data summary or its target is a
//! widget. Valid links allow Highlight and Filter when both ends share a
//! dimension attribute or the target plots individual rows; otherwise only
//! Filter. Highlight is the default whenever it is allowed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canvas::{CanvasElement, CanvasState, ChartKind, ElementSpec, LinkMode, TimeWindow, ViewSpec, WidgetKind};
use crate::dataset::{Dataset, DatasetError, Predicate, Scalar};
use crate::viewdata::{self, ViewData};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InteractionError {
    #[error("an element cannot link to itself (`{0}`)")]
    SelfLink(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("unknown event source `{0}`")]
    UnknownSource(String),
    #[error("mode {mode:?} is not allowed from `{from}` to `{to}`")]
    ModeNotAllowed { from: String, to: String, mode: LinkMode },
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionLink {
    pub source_id: String,
    pub target_id: String,
    /// Highlight before Filter. Empty iff the link is invalid.
    pub allowed_modes: Vec<LinkMode>,
    pub active_mode: Option<LinkMode>,
    pub valid: bool,
}

impl InteractionLink {
    fn new(source: &str, target: &str, allowed_modes: Vec<LinkMode>) -> Self {
        InteractionLink {
            source_id: source.to_string(),
            target_id: target.to_string(),
            active_mode: allowed_modes.first().copied(),
            valid: !allowed_modes.is_empty(),
            allowed_modes,
        }
    }

    pub fn allows(&self, mode: LinkMode) -> bool {
        self.allowed_modes.contains(&mode)
    }

    pub fn with_mode(mut self, mode: LinkMode) -> Result<Self, InteractionError> {
        if !self.allows(mode) {
            return Err(InteractionError::ModeNotAllowed {
                from: self.source_id,
                to: self.target_id,
                mode,
            });
        }
        self.active_mode = Some(mode);
        Ok(self)
    }
}

/// Element kinds distinguished by the link rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    View(ChartKind),
    Widget,
}

impl ElementKind {
    pub fn of(spec: &ElementSpec) -> Self {
        match spec {
            ElementSpec::View(v) => ElementKind::View(v.kind),
            ElementSpec::Widget(_) => ElementKind::Widget,
        }
    }
}

/// Allowed modes for a link between two element kinds.
pub fn allowed_modes(source: ElementKind, target: ElementKind, shared_dimension: bool) -> Vec<LinkMode> {
    match (source, target) {
        (ElementKind::View(ChartKind::DataSummary), _) | (_, ElementKind::Widget) => Vec::new(),
        (_, ElementKind::View(t)) if shared_dimension || t.encodes_rows() => vec![LinkMode::Highlight, LinkMode::Filter],
        _ => vec![LinkMode::Filter],
    }
}

/// Whether both elements bind the same attribute to a categorical,
/// geographic or temporal encoding.
pub fn shares_dimension(a: &ElementSpec, b: &ElementSpec) -> bool {
    let bd = b.dimension_attributes();
    a.dimension_attributes().iter().any(|x| bd.contains(x))
}

pub fn classify_pair(source: &CanvasElement, target: &CanvasElement) -> Result<InteractionLink, InteractionError> {
    if source.id == target.id {
        return Err(InteractionError::SelfLink(source.id.clone()));
    }
    let modes = allowed_modes(
        ElementKind::of(&source.spec),
        ElementKind::of(&target.spec),
        shares_dimension(&source.spec, &target.spec),
    );
    Ok(InteractionLink::new(&source.id, &target.id, modes))
}

/// Classifies every ordered pair of distinct elements, in element order.
/// Link overrides stored on the canvas replace the default mode when the
/// link still allows them.
pub fn infer_links(canvas: &CanvasState) -> Vec<InteractionLink> {
    let mut links = Vec::new();
    for s in &canvas.elements {
        for t in &canvas.elements {
            if s.id == t.id {
                continue;
            }
            let mut link = classify_pair(s, t).expect("distinct ids");
            if let Some(mode) = canvas.link_override(&s.id, &t.id).filter(|m| link.allows(*m)) {
                link.active_mode = Some(mode);
            }
            links.push(link);
        }
    }
    links
}

/// Stores a user-chosen mode for a link.
pub fn set_link_mode(
    canvas: &mut CanvasState,
    source: &str,
    target: &str,
    mode: LinkMode,
) -> Result<InteractionLink, InteractionError> {
    let s = canvas
        .get(source)
        .ok_or_else(|| InteractionError::UnknownElement(source.to_string()))?;
    let t = canvas
        .get(target)
        .ok_or_else(|| InteractionError::UnknownElement(target.to_string()))?;
    let link = classify_pair(s, t)?.with_mode(mode)?;
    canvas.set_link_override(source, target, Some(mode));
    Ok(link)
}

/// Drops overrides whose elements are gone or whose mode is no longer
/// allowed.
pub fn prune_link_overrides(canvas: &mut CanvasState) {
    let keep: Vec<bool> = canvas
        .link_overrides
        .iter()
        .map(|o| match (canvas.get(&o.source), canvas.get(&o.target)) {
            (Some(s), Some(t)) => classify_pair(s, t).is_ok_and(|l| l.allows(o.mode)),
            _ => false,
        })
        .collect();
    let mut keep = keep.into_iter();
    canvas.link_overrides.retain(|_| keep.next().unwrap_or(false));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Selection {
    /// Marks clicked in a view. Values of one attribute are alternatives;
    /// different attributes must all match.
    Marks { values: Vec<SelectedValue> },
    /// Year picker value.
    Year { year: i32 },
    /// Range slider bounds, inclusive. Years on temporal attributes.
    Range { min: f64, max: f64 },
    /// Multi-select values.
    Categories { values: Vec<String> },
    /// Nothing selected; targets show all data.
    Clear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedValue {
    pub attribute: String,
    pub value: Scalar,
}

impl SelectedValue {
    pub fn new(attribute: &str, value: impl Into<Scalar>) -> Self {
        SelectedValue {
            attribute: attribute.to_string(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionEvent {
    pub source_id: String,
    pub selection: Selection,
}

/// Click state of one source: clicking a selected value deselects it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkSelection {
    values: Vec<SelectedValue>,
}

impl MarkSelection {
    pub fn toggle(&mut self, value: SelectedValue) {
        match self.values.iter().position(|v| *v == value) {
            Some(i) => {
                self.values.remove(i);
            }
            None => self.values.push(value),
        }
    }

    pub fn selection(&self) -> Selection {
        if self.values.is_empty() {
            Selection::Clear
        } else {
            Selection::Marks {
                values: self.values.clone(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Effect {
    /// Target data restricted to rows matching every predicate.
    Filter { predicates: Vec<Predicate> },
    /// Rows matching every predicate are emphasized; data unchanged.
    Highlight { predicates: Vec<Predicate> },
    NoOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetEffect {
    pub target_id: String,
    pub effect: Effect,
}

/// Predicates a selection on `source` stands for. Empty for [`Selection::Clear`].
pub fn selection_predicates(source: &ElementSpec, selection: &Selection) -> Result<Vec<Predicate>, InteractionError> {
    let invalid = |m: String| Err(InteractionError::InvalidSelection(m));
    match (source, selection) {
        (_, Selection::Clear) => Ok(Vec::new()),
        (ElementSpec::View(v), Selection::Marks { values }) => {
            let encoded = v.attributes();
            let mut by_attr: BTreeMap<&str, Vec<Scalar>> = BTreeMap::new();
            let mut order = Vec::new();
            for sv in values {
                if !encoded.contains(&sv.attribute.as_str()) {
                    return invalid(format!("`{}` is not encoded by the source", sv.attribute));
                }
                let entry = by_attr.entry(&sv.attribute).or_default();
                if entry.is_empty() {
                    order.push(sv.attribute.as_str());
                }
                if !entry.contains(&sv.value) {
                    entry.push(sv.value.clone());
                }
            }
            Ok(order
                .into_iter()
                .map(|a| {
                    let mut vals = by_attr.remove(a).expect("collected");
                    if vals.len() == 1 {
                        Predicate::Eq {
                            attribute: a.to_string(),
                            value: vals.remove(0),
                        }
                    } else {
                        Predicate::In {
                            attribute: a.to_string(),
                            values: vals,
                        }
                    }
                })
                .collect())
        }
        (ElementSpec::Widget(w), s) => {
            let attribute = w.attribute.clone();
            let p = match (w.kind, s) {
                (WidgetKind::YearPicker, Selection::Year { year }) => Predicate::Range {
                    attribute,
                    min: Scalar::from(*year),
                    max: Scalar::from(*year),
                },
                (WidgetKind::RangeSlider, Selection::Range { min, max }) if min <= max => Predicate::Range {
                    attribute,
                    min: Scalar::from(*min),
                    max: Scalar::from(*max),
                },
                (WidgetKind::MultiSelect, Selection::Categories { values }) => Predicate::In {
                    attribute,
                    values: values.iter().map(|v| Scalar::from(v.as_str())).collect(),
                },
                (k, s) => return invalid(format!("{s:?} does not fit a {k:?} widget")),
            };
            Ok(vec![p])
        }
        (ElementSpec::View(_), s) => invalid(format!("{s:?} is a widget selection")),
    }
}

/// Effect of a selection on every other element, in element order.
pub fn apply_event(event: &SelectionEvent, canvas: &CanvasState) -> Result<Vec<TargetEffect>, InteractionError> {
    let source = canvas
        .get(&event.source_id)
        .ok_or_else(|| InteractionError::UnknownSource(event.source_id.clone()))?;
    let predicates = selection_predicates(&source.spec, &event.selection)?;
    Ok(infer_links(canvas)
        .into_iter()
        .filter(|l| l.source_id == source.id)
        .map(|l| TargetEffect {
            effect: match l.active_mode {
                Some(LinkMode::Filter) => Effect::Filter {
                    predicates: predicates.clone(),
                },
                Some(LinkMode::Highlight) => Effect::Highlight {
                    predicates: predicates.clone(),
                },
                None => Effect::NoOp,
            },
            target_id: l.target_id,
        })
        .collect())
}

/// Rows a target shows and which of them are emphasized.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEffect {
    pub rows: Vec<usize>,
    pub emphasized: Vec<bool>,
}

pub fn effect_rows(ds: &Dataset, effect: &Effect) -> Result<RowEffect, DatasetError> {
    let all: Vec<usize> = (0..ds.row_count()).collect();
    match effect {
        Effect::Filter { predicates } => {
            let rows = ds.select_rows(predicates)?;
            let emphasized = vec![false; rows.len()];
            Ok(RowEffect { rows, emphasized })
        }
        Effect::Highlight { predicates } if !predicates.is_empty() => {
            let emphasized = all
                .iter()
                .map(|&r| ds.row_matches(r, predicates))
                .collect::<Result<_, _>>()?;
            Ok(RowEffect { rows: all, emphasized })
        }
        _ => Ok(RowEffect {
            emphasized: vec![false; all.len()],
            rows: all,
        }),
    }
}

/// The view and remaining filters a Filter effect resolves to. A
/// single-year range on the temporal attribute of a year-windowed view moves
/// the window to that year instead of removing the other year's rows.
pub fn rebind_for_filter(view: &ViewSpec, predicates: &[Predicate]) -> (ViewSpec, Vec<Predicate>) {
    let mut view = view.clone();
    let mut filters = Vec::with_capacity(predicates.len());
    for p in predicates {
        match (p, view.window, view.temporal.as_deref()) {
            (
                Predicate::Range {
                    attribute,
                    min: Scalar::Number(lo),
                    max: Scalar::Number(hi),
                },
                Some(TimeWindow::YearOverYear { .. } | TimeWindow::Year { .. }),
                Some(t),
            ) if attribute == t && lo == hi && lo.fract() == 0.0 => {
                let year = *lo as i32;
                view.window = Some(match view.window {
                    Some(TimeWindow::YearOverYear { .. }) => TimeWindow::YearOverYear { year },
                    _ => TimeWindow::Year { year },
                });
            }
            _ => filters.push(p.clone()),
        }
    }
    (view, filters)
}

/// Data of a target view after an effect; see [`rebind_for_filter`].
pub fn target_view_data(ds: &Dataset, view: &ViewSpec, effect: &Effect) -> Result<ViewData, DatasetError> {
    let Effect::Filter { predicates } = effect else {
        return viewdata::compute(ds, view, &[]);
    };
    let (view, filters) = rebind_for_filter(view, predicates);
    viewdata::compute(ds, &view, &filters)
}
