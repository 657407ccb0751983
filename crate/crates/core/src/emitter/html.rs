use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use super::chart::GeoSource;
use super::document::DashboardDocument;
use super::AGGREGATE_JS;
use crate::canvas::ElementSpec;
use crate::dataset::{AttrType, Dataset};

const VEGA_JS: &str = include_str!("../../assets/vendor/vega.min.js");
const VEGA_LITE_JS: &str = include_str!("../../assets/vendor/vega-lite.min.js");
const DASHBOARD_JS: &str = include_str!("../../assets/medley-dashboard.js");

const STYLE: &str = "body{font-family:system-ui,sans-serif;margin:16px;background:#fafafa}\
#grid{display:grid;grid-template-columns:repeat(12,1fr);gap:12px}\
.cell{background:#fff;border:1px solid #ddd;border-radius:4px;padding:4px;overflow:hidden}\
.widget{display:flex;flex-direction:column;gap:6px;padding:8px}\
.widget select[multiple]{flex:1}";

/// Data the client needs to recompute views: one column per attribute used
/// by the dashboard, plus type, year and range metadata.
pub fn client_payload(doc: &DashboardDocument, ds: &Dataset) -> Value {
    let mut used: BTreeSet<&str> = BTreeSet::new();
    for e in &doc.elements {
        match &e.element {
            ElementSpec::View(v) => used.extend(v.attributes()),
            ElementSpec::Widget(w) => {
                used.insert(&w.attribute);
            }
        }
    }
    let mut columns = Map::new();
    let mut types = Map::new();
    let mut years = Map::new();
    let mut ranges = Map::new();
    let mut categories = Map::new();
    for meta in ds.attributes().iter().filter(|m| used.contains(m.name.as_str())) {
        let name = &meta.name;
        let col: Vec<Value> = (0..ds.row_count()).map(|r| ds.cell(r, name).to_json()).collect();
        columns.insert(name.clone(), Value::Array(col));
        types.insert(name.clone(), Value::from(meta.attr_type.code()));
        match meta.attr_type {
            AttrType::Temporal => {
                years.insert(name.clone(), json!(ds.years(name)));
            }
            AttrType::Quantitative => {
                if let Some((lo, hi)) = meta.numeric_range {
                    ranges.insert(name.clone(), json!([lo, hi]));
                }
            }
            AttrType::Categorical | AttrType::Geographic => {
                categories.insert(name.clone(), json!(ds.category_values(name)));
            }
        }
    }

    let elements: Vec<Value> = doc
        .elements
        .iter()
        .map(|e| {
            let mut chart = e.chart.clone();
            if let Some(spec) = chart.as_mut() {
                inline_geo(spec);
            }
            json!({"id": e.id, "element": e.element, "geometry": e.geometry, "chart": chart})
        })
        .collect();
    json!({
        "elements": elements,
        "links": doc.links,
        "rowCount": ds.row_count(),
        "columns": columns,
        "types": types,
        "years": years,
        "ranges": ranges,
        "categories": categories,
    })
}

/// Replaces a map's named boundary reference with the bundled TopoJSON.
fn inline_geo(spec: &mut Value) {
    let Some(name) = spec.pointer("/usermeta/medley/geo/name").and_then(Value::as_str) else {
        return;
    };
    let source = [GeoSource::UsStates, GeoSource::WorldCountries]
        .into_iter()
        .find(|g| g.name() == name)
        .expect("emitted geo names are known");
    let topo: Value = serde_json::from_str(source.topojson()).expect("bundled TopoJSON parses");
    spec["data"] = json!({
        "values": topo,
        "format": {"type": "topojson", "feature": source.feature()},
    });
}

fn script(js: &str) -> String {
    format!("<script>{}</script>\n", js.replace("</script", "<\\/script"))
}

/// A standalone page that renders every element and applies link effects
/// in the browser. It loads nothing over the network.
pub fn render_html(doc: &DashboardDocument, ds: &Dataset) -> String {
    let payload = client_payload(doc, ds).to_string().replace('<', "\\u003c");
    let mut out = String::with_capacity(VEGA_JS.len() + VEGA_LITE_JS.len() + payload.len() + 16_384);
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<title>Dashboard</title>\n");
    out.push_str(&format!("<style>{STYLE}</style>\n"));
    out.push_str(&script(VEGA_JS));
    out.push_str(&script(VEGA_LITE_JS));
    out.push_str(&script(AGGREGATE_JS));
    out.push_str("</head>\n<body>\n<div id=\"grid\"></div>\n");
    out.push_str(&format!(
        "<script type=\"application/json\" id=\"medley-data\">{payload}</script>\n"
    ));
    out.push_str(&script(DASHBOARD_JS));
    out.push_str("</body>\n</html>\n");
    out
}
