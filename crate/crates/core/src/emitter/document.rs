use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::chart::emit_chart_spec_with;
use super::colors::ColorAssignment;
use super::EmitError;
use crate::canvas::{CanvasElement, CanvasState, ElementSpec, Geometry, LinkOverride, ViewOverrides};
use crate::dataset::{AttributeMeta, Dataset};
use crate::interactions::{infer_links, InteractionLink};

/// Format version written into every exported document.
pub const DOCUMENT_VERSION: &str = "medley-dashboard/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DatasetRef {
    pub id: String,
    pub row_count: usize,
    pub attributes: Vec<AttributeMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DocumentElement {
    pub id: String,
    pub element: ElementSpec,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "ViewOverrides::is_empty")]
    pub overrides: ViewOverrides,
    /// Vega-Lite spec of a view; absent for widgets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DashboardDocument {
    pub version: String,
    pub dataset: DatasetRef,
    pub elements: Vec<DocumentElement>,
    pub links: Vec<InteractionLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_overrides: Vec<LinkOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Html,
}

impl DashboardDocument {
    pub fn build(ds: &Dataset, canvas: &CanvasState, colors: &ColorAssignment) -> Result<Self, EmitError> {
        if canvas.is_empty() {
            return Err(EmitError::EmptyCanvas);
        }
        let elements = canvas
            .elements
            .iter()
            .map(|e| {
                let chart = match &e.spec {
                    ElementSpec::View(v) => Some(emit_chart_spec_with(v, ds, colors, &e.overrides, &[])?),
                    ElementSpec::Widget(_) => None,
                };
                Ok(DocumentElement {
                    id: e.id.clone(),
                    element: e.spec.clone(),
                    geometry: e.geometry,
                    overrides: e.overrides,
                    chart,
                })
            })
            .collect::<Result<_, EmitError>>()?;
        Ok(DashboardDocument {
            version: DOCUMENT_VERSION.into(),
            dataset: DatasetRef {
                id: ds.id().to_string(),
                row_count: ds.row_count(),
                attributes: ds.attributes().to_vec(),
            },
            elements,
            links: infer_links(canvas),
            link_overrides: canvas.link_overrides.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, EmitError> {
        let doc: DashboardDocument = serde_json::from_str(text).map_err(|e| EmitError::Parse(e.to_string()))?;
        if doc.version != DOCUMENT_VERSION {
            return Err(EmitError::Parse(format!("unsupported version `{}`", doc.version)));
        }
        doc.to_canvas()?;
        Ok(doc)
    }

    /// The canvas the document was exported from.
    pub fn to_canvas(&self) -> Result<CanvasState, EmitError> {
        let mut ids = HashSet::new();
        for e in &self.elements {
            if !ids.insert(e.id.as_str()) {
                return Err(EmitError::Parse(format!("duplicate element id `{}`", e.id)));
            }
        }
        for o in &self.link_overrides {
            if !ids.contains(o.source.as_str()) || !ids.contains(o.target.as_str()) {
                return Err(EmitError::Parse(format!(
                    "link override `{}` -> `{}` names a missing element",
                    o.source, o.target
                )));
            }
        }
        let mut link_overrides = self.link_overrides.clone();
        link_overrides.sort();
        Ok(CanvasState {
            elements: self
                .elements
                .iter()
                .map(|e| CanvasElement {
                    id: e.id.clone(),
                    spec: e.element.clone(),
                    geometry: e.geometry,
                    overrides: e.overrides,
                })
                .collect(),
            link_overrides,
        })
    }
}

/// Serialized dashboard in the requested format.
pub fn export_dashboard(
    ds: &Dataset,
    canvas: &CanvasState,
    colors: &ColorAssignment,
    format: ExportFormat,
) -> Result<Vec<u8>, EmitError> {
    let doc = DashboardDocument::build(ds, canvas, colors)?;
    Ok(match format {
        ExportFormat::Json => doc.to_json().into_bytes(),
        ExportFormat::Html => super::html::render_html(&doc, ds).into_bytes(),
    })
}
