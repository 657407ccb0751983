//! Collection templates: which attribute types a collection needs and which
//! views and widgets it shows once those attributes are bound.
//!
//! The catalog is data. The bundled default lives in `assets/catalog.json`
//! and any document with the same schema can replace it.

mod enumerate;
mod populate;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::canvas::{ChartKind, TimeWindow, ViewShape, ViewSpec, WidgetKind, WidgetSpec};
use crate::dataset::{AggFn, AttrType};

pub use enumerate::{attribute_order_score, enumerate_attribute_sets, slot_compatible, EnumerationContext};
pub use populate::{populate_collection, PopulateError, RECORD_COUNT_LABEL};

const DEFAULT_CATALOG: &str = include_str!("../../assets/catalog.json");

/// Default bound on attribute sets enumerated per template.
pub const DEFAULT_ENUMERATION_CAP: usize = 256;

/// At most this many views per template; widgets are not counted.
pub const MAX_VIEWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intent {
    MeasureAnalysis,
    ChangeAnalysis,
    CategoryAnalysis,
    DistributionAnalysis,
}

impl Intent {
    pub const ALL: [Intent; 4] = [
        Intent::MeasureAnalysis,
        Intent::ChangeAnalysis,
        Intent::CategoryAnalysis,
        Intent::DistributionAnalysis,
    ];

    /// Intent order of the default (no input, empty canvas) ranking.
    pub const ROUND_ROBIN: [Intent; 4] = [
        Intent::DistributionAnalysis,
        Intent::MeasureAnalysis,
        Intent::CategoryAnalysis,
        Intent::ChangeAnalysis,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Intent::MeasureAnalysis => "Measure Analysis",
            Intent::ChangeAnalysis => "Change Analysis",
            Intent::CategoryAnalysis => "Category Analysis",
            Intent::DistributionAnalysis => "Distribution Analysis",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Intent {
    type Err = String;

    /// Accepts the serialized name, the label, or a short alias
    /// (`measure`, `change`, `category`, `distribution`), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        let key = key.strip_suffix("analysis").unwrap_or(&key);
        match key {
            "measure" => Ok(Intent::MeasureAnalysis),
            "change" => Ok(Intent::ChangeAnalysis),
            "category" => Ok(Intent::CategoryAnalysis),
            "distribution" => Ok(Intent::DistributionAnalysis),
            _ => Err(format!("unknown intent `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AttributeSlot {
    pub id: String,
    #[serde(rename = "type")]
    pub slot_type: AttrType,
    #[serde(default = "one")]
    pub multiplicity: usize,
    pub primary: bool,
    /// A skipped slot turns its views into record counts instead of
    /// dropping them.
    #[serde(default, skip_serializing_if = "is_false")]
    pub count_fallback: bool,
    /// Temporal slots only: the fewest distinct years an attribute needs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_years: Option<usize>,
}

fn one() -> usize {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Reference to one instance of a slot: `C` (first instance) or `C.2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SlotRef {
    pub slot: String,
    /// 1-based.
    pub instance: usize,
}

impl SlotRef {
    pub fn new(slot: &str, instance: usize) -> Self {
        SlotRef {
            slot: slot.to_string(),
            instance,
        }
    }
}

impl FromStr for SlotRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (slot, instance) = match s.rsplit_once('.') {
            Some((slot, n)) => (
                slot,
                n.parse::<usize>()
                    .map_err(|_| format!("bad slot instance in `{s}`"))?,
            ),
            None => (s, 1),
        };
        if slot.is_empty() || instance == 0 {
            return Err(format!("bad slot reference `{s}`"));
        }
        Ok(SlotRef::new(slot, instance))
    }
}

impl TryFrom<String> for SlotRef {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SlotRef> for String {
    fn from(r: SlotRef) -> String {
        r.to_string()
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.instance == 1 {
            f.write_str(&self.slot)
        } else {
            write!(f, "{}.{}", self.slot, self.instance)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WindowRecipe {
    /// Rows of the most recent year.
    LatestYear,
    /// Most recent year against the year before.
    YearOverYear,
    YearlyChange,
}

impl WindowRecipe {
    fn placeholder(self) -> TimeWindow {
        match self {
            WindowRecipe::LatestYear => TimeWindow::Year { year: 0 },
            WindowRecipe::YearOverYear => TimeWindow::YearOverYear { year: 0 },
            WindowRecipe::YearlyChange => TimeWindow::YearlyChange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ViewRecipe {
    pub kind: ChartKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<SlotRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dimensions: Vec<SlotRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<SlotRef>,
    pub agg: AggFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowRecipe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

impl ViewRecipe {
    pub fn refs(&self) -> impl Iterator<Item = &SlotRef> {
        self.measures.iter().chain(&self.dimensions).chain(self.temporal.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WidgetRecipe {
    pub kind: WidgetKind,
    pub slot: SlotRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CollectionTemplate {
    pub code: String,
    pub intent: Intent,
    /// Text with `{SLOT}`, `{SLOT.n}`, `{year}` and `{prev_year}` placeholders.
    pub objective: String,
    /// The view list is inferred rather than transcribed.
    #[serde(default, skip_serializing_if = "is_false")]
    pub reconstructed: bool,
    pub slots: Vec<AttributeSlot>,
    pub views: Vec<ViewRecipe>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub widgets: Vec<WidgetRecipe>,
}

impl CollectionTemplate {
    pub fn slot(&self, id: &str) -> Option<&AttributeSlot> {
        self.slots.iter().find(|s| s.id == id)
    }

    pub fn primary_slots(&self) -> impl Iterator<Item = &AttributeSlot> {
        self.slots.iter().filter(|s| s.primary)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    pub version: u32,
    pub templates: Vec<CollectionTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog does not parse: {0}")]
    Parse(String),
    #[error("template `{code}`, {field}: {message}")]
    Validation {
        code: String,
        field: String,
        message: String,
    },
}

/// A validated, immutable list of templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    templates: Vec<CollectionTemplate>,
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        let doc: CatalogDocument = serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        Catalog::from_document(doc)
    }

    pub fn from_document(doc: CatalogDocument) -> Result<Catalog, CatalogError> {
        let mut codes = HashSet::new();
        for t in &doc.templates {
            if !codes.insert(t.code.as_str()) {
                return Err(invalid(&t.code, "code", "duplicate template code"));
            }
            validate_template(t)?;
        }
        if doc.templates.is_empty() {
            return Err(invalid("", "templates", "catalog is empty"));
        }
        Ok(Catalog {
            templates: doc.templates,
        })
    }

    /// The bundled catalog.
    pub fn bundled() -> &'static Catalog {
        static BUNDLED: OnceLock<Catalog> = OnceLock::new();
        BUNDLED.get_or_init(|| Catalog::from_json(DEFAULT_CATALOG).expect("bundled catalog is valid"))
    }

    pub fn bundled_json() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn templates(&self) -> &[CollectionTemplate] {
        &self.templates
    }

    pub fn get(&self, code: &str) -> Option<&CollectionTemplate> {
        self.templates.iter().find(|t| t.code == code)
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.templates.iter().position(|t| t.code == code)
    }

    pub fn to_document(&self) -> CatalogDocument {
        CatalogDocument {
            version: 1,
            templates: self.templates.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("catalog serializes")
    }
}

fn invalid(code: &str, field: &str, message: &str) -> CatalogError {
    CatalogError::Validation {
        code: code.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn validate_template(t: &CollectionTemplate) -> Result<(), CatalogError> {
    let code = t.code.as_str();
    if code.is_empty() {
        return Err(invalid(code, "code", "empty template code"));
    }
    let mut ids = HashSet::new();
    for s in &t.slots {
        let field = format!("slots.{}", s.id);
        if s.id.is_empty() || s.id.contains(['.', '{', '}']) {
            return Err(invalid(code, &field, "slot ids are non-empty and contain no `.`, `{` or `}`"));
        }
        if !ids.insert(s.id.as_str()) {
            return Err(invalid(code, &field, "duplicate slot id"));
        }
        if s.multiplicity == 0 {
            return Err(invalid(code, &field, "multiplicity must be at least 1"));
        }
        if s.count_fallback && (s.primary || s.slot_type != AttrType::Quantitative) {
            return Err(invalid(code, &field, "only secondary Q slots may fall back to counts"));
        }
        if s.min_years.is_some() && s.slot_type != AttrType::Temporal {
            return Err(invalid(code, &field, "minYears applies to T slots"));
        }
    }
    if t.primary_slots().next().is_none() {
        return Err(invalid(code, "slots", "at least one slot must be primary"));
    }
    if t.views.is_empty() {
        return Err(invalid(code, "views", "template has no views"));
    }
    if t.views.len() > MAX_VIEWS {
        return Err(invalid(code, "views", "more than 10 views"));
    }

    let resolve = |r: &SlotRef, field: &str| -> Result<&AttributeSlot, CatalogError> {
        let slot = t
            .slot(&r.slot)
            .ok_or_else(|| invalid(code, field, &format!("undeclared slot `{r}`")))?;
        if r.instance > slot.multiplicity {
            return Err(invalid(code, field, &format!("`{r}` exceeds the slot multiplicity")));
        }
        Ok(slot)
    };

    let mut referenced: BTreeSet<SlotRef> = BTreeSet::new();
    let mut has_core_view = false;
    for (i, v) in t.views.iter().enumerate() {
        let field = format!("views[{i}]");
        for r in &v.measures {
            if resolve(r, &field)?.slot_type != AttrType::Quantitative {
                return Err(invalid(code, &field, &format!("measure `{r}` is not a Q slot")));
            }
        }
        for r in &v.dimensions {
            let ty = resolve(r, &field)?.slot_type;
            let ok = match v.kind {
                ChartKind::Map => ty == AttrType::Geographic,
                _ => matches!(ty, AttrType::Categorical | AttrType::Geographic),
            };
            if !ok {
                return Err(invalid(code, &field, &format!("dimension `{r}` has the wrong type")));
            }
        }
        if let Some(r) = &v.temporal {
            let slot = resolve(r, &field)?;
            if slot.slot_type != AttrType::Temporal {
                return Err(invalid(code, &field, &format!("`{r}` is not a T slot")));
            }
            let change = v.window.is_some_and(|w| w.placeholder().is_change());
            if change && slot.min_years.unwrap_or(1) < 2 {
                return Err(invalid(code, &field, "change views need a T slot with minYears >= 2"));
            }
        }
        let shape = ViewShape {
            kind: v.kind,
            measures: v.measures.len(),
            dimensions: v.dimensions.len(),
            temporal: v.temporal.is_some(),
            window: v.window.map(WindowRecipe::placeholder),
            limit: v.limit.is_some(),
        };
        shape.check().map_err(|m| invalid(code, &field, m))?;
        if v.measures.is_empty() && v.agg != AggFn::Count {
            return Err(invalid(code, &field, "views without a measure must count records"));
        }
        let fallback: Vec<&SlotRef> = v
            .measures
            .iter()
            .filter(|r| t.slot(&r.slot).is_some_and(|s| s.count_fallback))
            .collect();
        if !fallback.is_empty() {
            let counted = ViewShape {
                measures: v.measures.len() - fallback.len(),
                ..shape
            };
            if counted.check().is_err() || v.measures.len() > 1 {
                return Err(invalid(code, &field, "view cannot fall back to a record count"));
            }
        }
        let core = v.refs().all(|r| {
            t.slot(&r.slot)
                .is_some_and(|s| s.primary || s.count_fallback)
        });
        has_core_view |= core;
        referenced.extend(v.refs().cloned());
    }
    if !has_core_view {
        return Err(invalid(code, "views", "no view is built from primary slots alone"));
    }
    for s in t.primary_slots() {
        for i in 1..=s.multiplicity {
            let r = SlotRef::new(&s.id, i);
            if !referenced.contains(&r) {
                return Err(invalid(code, "views", &format!("primary slot `{r}` is not shown")));
            }
        }
    }

    for (i, w) in t.widgets.iter().enumerate() {
        let field = format!("widgets[{i}]");
        let ty = resolve(&w.slot, &field)?.slot_type;
        if !w.kind.binds(ty) {
            return Err(invalid(code, &field, &format!("{:?} cannot bind a {ty} slot", w.kind)));
        }
    }

    for name in placeholders(&t.objective) {
        if name == "year" || name == "prev_year" {
            if !t.primary_slots().any(|s| s.slot_type == AttrType::Temporal) {
                return Err(invalid(code, "objective", "year placeholders need a primary T slot"));
            }
            continue;
        }
        let r: SlotRef = name.parse().map_err(|e: String| invalid(code, "objective", &e))?;
        let slot = resolve(&r, "objective")?;
        if !(slot.primary || slot.count_fallback) {
            return Err(invalid(code, "objective", &format!("`{r}` may be skipped")));
        }
    }
    Ok(())
}

/// Names inside `{...}` in an objective pattern.
fn placeholders(pattern: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else { break };
        out.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    out
}

/// Concrete attributes bound to each slot, in slot declaration order.
/// A slot with fewer attributes than its multiplicity has its trailing
/// instances skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeAssignment(pub IndexMap<String, Vec<String>>);

impl AttributeAssignment {
    pub fn get(&self, r: &SlotRef) -> Option<&str> {
        self.0.get(&r.slot)?.get(r.instance - 1).map(String::as_str)
    }

    pub fn slot(&self, id: &str) -> &[String] {
        self.0.get(id).map_or(&[], Vec::as_slice)
    }

    /// Every bound attribute, in slot order.
    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.0.values().flatten().map(String::as_str)
    }
}

/// A template populated with concrete attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Collection {
    pub code: String,
    pub intent: Intent,
    pub objective: String,
    pub assignment: AttributeAssignment,
    /// Attributes bound to primary, non-temporal slots.
    pub primary_attributes: Vec<String>,
    pub views: Vec<ViewSpec>,
    /// Recipe index each view was built from.
    pub view_recipes: Vec<usize>,
    pub widgets: Vec<WidgetSpec>,
}
