//! Views, widgets and the dashboard canvas they are placed on.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{AggFn, AttrType, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartKind {
    Bar,
    GroupedBar,
    StackedBar,
    Donut,
    Line,
    Map,
    Scatter,
    Histogram,
    Heatmap,
    DataSummary,
    DifferenceBar,
}

impl ChartKind {
    pub const ALL: [ChartKind; 11] = [
        ChartKind::Bar,
        ChartKind::GroupedBar,
        ChartKind::StackedBar,
        ChartKind::Donut,
        ChartKind::Line,
        ChartKind::Map,
        ChartKind::Scatter,
        ChartKind::Histogram,
        ChartKind::Heatmap,
        ChartKind::DataSummary,
        ChartKind::DifferenceBar,
    ];

    /// Marks correspond to individual data rows rather than aggregates.
    pub fn encodes_rows(self) -> bool {
        matches!(self, ChartKind::Scatter)
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Restricts or transforms a view's data along its temporal attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum TimeWindow {
    /// Only rows from one year.
    Year { year: i32 },
    /// Change between `year` and the year before.
    YearOverYear { year: i32 },
    /// Change from each year to the next, across all years.
    YearlyChange,
}

impl TimeWindow {
    pub fn is_change(self) -> bool {
        matches!(self, TimeWindow::YearOverYear { .. } | TimeWindow::YearlyChange)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Ascending,
    Descending,
}

/// A concrete chart: chart kind plus attribute bindings.
///
/// Two views are the same view when all fields are equal; layout and
/// presentation overrides are not part of a view's identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ViewSpec {
    pub kind: ChartKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<String>,
    /// Categorical or geographic attributes. The first is the primary axis;
    /// the second, when present, is the color/series dimension.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dimensions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<String>,
    pub agg: AggFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<TimeWindow>,
    /// Keep only the top-N groups by value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ViewError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("invalid {kind} view: {reason}")]
    Invalid { kind: ChartKind, reason: String },
    #[error("invalid {kind:?} widget: {reason}")]
    InvalidWidget { kind: WidgetKind, reason: String },
}

impl ViewSpec {
    pub fn new(kind: ChartKind, agg: AggFn) -> Self {
        ViewSpec {
            kind,
            measures: Vec::new(),
            dimensions: Vec::new(),
            temporal: None,
            agg,
            window: None,
            limit: None,
        }
    }

    pub fn measure(mut self, name: &str) -> Self {
        self.measures.push(name.to_string());
        self
    }

    pub fn dimension(mut self, name: &str) -> Self {
        self.dimensions.push(name.to_string());
        self
    }

    pub fn over_time(mut self, name: &str) -> Self {
        self.temporal = Some(name.to_string());
        self
    }

    pub fn window(mut self, window: TimeWindow) -> Self {
        self.window = Some(window);
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }

    /// Every attribute the view encodes, in first-appearance order.
    pub fn attributes(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.measures
            .iter()
            .chain(&self.dimensions)
            .chain(self.temporal.iter())
            .map(String::as_str)
            .filter(|a| seen.insert(*a))
            .collect()
    }

    /// Dimension attributes, including the temporal attribute.
    pub fn dimension_attributes(&self) -> Vec<&str> {
        self.dimensions
            .iter()
            .chain(self.temporal.iter())
            .map(String::as_str)
            .collect()
    }

    pub fn encodes_change(&self) -> bool {
        self.window.is_some_and(TimeWindow::is_change)
    }

    pub fn shape(&self) -> ViewShape {
        ViewShape {
            kind: self.kind,
            measures: self.measures.len(),
            dimensions: self.dimensions.len(),
            temporal: self.temporal.is_some(),
            window: self.window,
            limit: self.limit.is_some(),
        }
    }

    /// Checks that the roles required by the chart kind are filled with
    /// attributes of the right type.
    pub fn validate(&self, ds: &Dataset) -> Result<(), ViewError> {
        let invalid = |reason: &str| ViewError::Invalid {
            kind: self.kind,
            reason: reason.to_string(),
        };
        let ty = |name: &str| {
            ds.attribute(name)
                .map(|a| a.attr_type)
                .ok_or_else(|| ViewError::UnknownAttribute(name.to_string()))
        };
        for m in &self.measures {
            if ty(m)? != AttrType::Quantitative {
                return Err(invalid(&format!("measure `{m}` is not quantitative")));
            }
        }
        for d in &self.dimensions {
            if !matches!(ty(d)?, AttrType::Categorical | AttrType::Geographic) {
                return Err(invalid(&format!("dimension `{d}` is not categorical or geographic")));
            }
        }
        if let Some(t) = &self.temporal {
            if ty(t)? != AttrType::Temporal {
                return Err(invalid(&format!("`{t}` is not temporal")));
            }
        }
        if self.measures.is_empty() && self.agg != AggFn::Count && self.kind != ChartKind::Histogram {
            return Err(invalid("views without a measure must count records"));
        }

        self.shape().check().map_err(invalid)?;
        if self.kind == ChartKind::Map && ty(&self.dimensions[0])? != AttrType::Geographic {
            return Err(invalid("maps need a geographic dimension"));
        }
        Ok(())
    }
}

/// Role counts of a view, independent of the attributes bound to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewShape {
    pub kind: ChartKind,
    pub measures: usize,
    pub dimensions: usize,
    pub temporal: bool,
    pub window: Option<TimeWindow>,
    pub limit: bool,
}

impl ViewShape {
    pub fn check(&self) -> Result<(), &'static str> {
        let (m, d) = (self.measures, self.dimensions);
        if self.window.is_some() && !self.temporal {
            return Err("time windows need a temporal attribute");
        }
        let ok = match self.kind {
            ChartKind::Bar | ChartKind::Donut | ChartKind::Map => m <= 1 && d == 1,
            ChartKind::GroupedBar => (m <= 1 && d == 2) || (m == 2 && d == 1),
            ChartKind::StackedBar | ChartKind::Heatmap => m <= 1 && d == 2,
            ChartKind::Line => m <= 2 && d == 0 && self.temporal,
            ChartKind::Scatter => m == 2 && d == 0,
            ChartKind::Histogram => m == 1 && d == 0,
            ChartKind::DataSummary => m <= 1 && d == 0,
            ChartKind::DifferenceBar => {
                m == 1
                    && match self.window {
                        Some(TimeWindow::YearOverYear { .. }) => d == 1,
                        Some(TimeWindow::YearlyChange) => d == 0,
                        _ => false,
                    }
            }
        };
        if !ok {
            return Err("roles do not match the chart kind");
        }
        match self.window {
            Some(w) if w.is_change() && m != 1 => Err("change views need exactly one measure"),
            Some(TimeWindow::YearlyChange)
                if !matches!(self.kind, ChartKind::DifferenceBar | ChartKind::Line) =>
            {
                Err("yearly change is drawn as bars or lines")
            }
            Some(TimeWindow::YearOverYear { .. })
                if !matches!(
                    self.kind,
                    ChartKind::DifferenceBar | ChartKind::Bar | ChartKind::Map | ChartKind::DataSummary
                ) =>
            {
                Err("year-over-year change needs a summary, bar or map")
            }
            _ if self.limit && !(d == 1 && m <= 1) => Err("top-N limits apply to single-dimension views"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WidgetKind {
    YearPicker,
    RangeSlider,
    MultiSelect,
}

impl WidgetKind {
    /// Whether a widget of this kind can control an attribute of type `ty`.
    pub fn binds(self, ty: AttrType) -> bool {
        match self {
            WidgetKind::YearPicker => ty == AttrType::Temporal,
            WidgetKind::RangeSlider => matches!(ty, AttrType::Temporal | AttrType::Quantitative),
            WidgetKind::MultiSelect => matches!(ty, AttrType::Categorical | AttrType::Geographic),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub kind: WidgetKind,
    pub attribute: String,
}

impl WidgetSpec {
    pub fn new(kind: WidgetKind, attribute: &str) -> Self {
        WidgetSpec {
            kind,
            attribute: attribute.to_string(),
        }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<(), ViewError> {
        let meta = ds
            .attribute(&self.attribute)
            .ok_or_else(|| ViewError::UnknownAttribute(self.attribute.clone()))?;
        if self.kind.binds(meta.attr_type) {
            Ok(())
        } else {
            Err(ViewError::InvalidWidget {
                kind: self.kind,
                reason: format!("`{}` is {}", self.attribute, meta.attr_type),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "element", rename_all = "lowercase")]
pub enum ElementSpec {
    View(ViewSpec),
    Widget(WidgetSpec),
}

impl ElementSpec {
    pub fn as_view(&self) -> Option<&ViewSpec> {
        match self {
            ElementSpec::View(v) => Some(v),
            ElementSpec::Widget(_) => None,
        }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<(), ViewError> {
        match self {
            ElementSpec::View(v) => v.validate(ds),
            ElementSpec::Widget(w) => w.validate(ds),
        }
    }

    pub fn is_widget(&self) -> bool {
        matches!(self, ElementSpec::Widget(_))
    }

    /// Attributes bound to a dimension role (for views) or the widget's attribute.
    pub fn dimension_attributes(&self) -> Vec<&str> {
        match self {
            ElementSpec::View(v) => v.dimension_attributes(),
            ElementSpec::Widget(w) => vec![w.attribute.as_str()],
        }
    }
}

/// Placement on the 12-column layout grid, in grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Geometry {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Geometry {
    pub const GRID_COLUMNS: u32 = 12;

    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Geometry { x, y, w, h }
    }
}

/// Per-element presentation edits that do not change a view's identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort: Option<SortOrder>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub swap_axes: bool,
}

impl ViewOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ViewOverrides::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanvasElement {
    pub id: String,
    pub spec: ElementSpec,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "ViewOverrides::is_empty")]
    pub overrides: ViewOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Highlight,
    Filter,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkOverride {
    pub source: String,
    pub target: String,
    pub mode: LinkMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CanvasState {
    #[serde(default)]
    pub elements: Vec<CanvasElement>,
    /// User-chosen link modes, sorted by (source, target).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_overrides: Vec<LinkOverride>,
}

impl CanvasState {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CanvasElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn views(&self) -> impl Iterator<Item = &ViewSpec> {
        self.elements.iter().filter_map(|e| e.spec.as_view())
    }

    pub fn contains_view(&self, view: &ViewSpec) -> bool {
        self.views().any(|v| v == view)
    }

    pub fn link_override(&self, source: &str, target: &str) -> Option<LinkMode> {
        self.link_overrides
            .iter()
            .find(|o| o.source == source && o.target == target)
            .map(|o| o.mode)
    }

    pub fn set_link_override(&mut self, source: &str, target: &str, mode: Option<LinkMode>) {
        self.link_overrides
            .retain(|o| !(o.source == source && o.target == target));
        if let Some(mode) = mode {
            self.link_overrides.push(LinkOverride {
                source: source.to_string(),
                target: target.to_string(),
                mode,
            });
            self.link_overrides.sort();
        }
    }
}
