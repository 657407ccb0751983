//! Vega-Lite chart specs and dashboard exports.
//!
//! Every spec follows the same presentation rules:
//! - each quantitative attribute and each categorical value keeps one color
//!   across all views, from [`assign_colors`];
//! - views that encode change use the red-blue diverging scale centred on 0;
//! - quantitative position axes start at zero;
//! - categorical axes sort by value, descending unless overridden.
//!
//! Specs carry their inlined data and a `usermeta.medley` block describing
//! the view, field names, colors used and sort order.

mod chart;
mod colors;
mod document;
mod html;

use crate::canvas::ViewError;
use crate::dataset::DatasetError;

pub use chart::{
    chart_values, emit_chart_spec, emit_chart_spec_with, field_map, measure_title, sample_indices, view_title,
    GeoSource, SCATTER_ROW_CAP, VEGA_LITE_SCHEMA,
};
pub use colors::{
    assign_colors, palette_color, ChangeScale, ColorAssignment, CATEGORY_PALETTE, COUNT_COLOR, QUANT_PALETTE,
    RAMP_START,
};
pub use document::{export_dashboard, DashboardDocument, DatasetRef, DocumentElement, ExportFormat, DOCUMENT_VERSION};
pub use html::{client_payload, render_html};

/// Source of the client-side view computation used by HTML exports.
pub const AGGREGATE_JS: &str = include_str!("../../assets/medley-aggregate.js");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmitError {
    #[error("unsupported view: {0}")]
    InvalidView(ViewError),
    #[error("{kind} cannot be drawn: {reason}")]
    UnsupportedChartKind { kind: crate::canvas::ChartKind, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("the canvas is empty")]
    EmptyCanvas,
    #[error("invalid dashboard document: {0}")]
    Parse(String),
}
