use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::colors::{ColorAssignment, COUNT_COLOR, RAMP_START};
use super::EmitError;
use crate::canvas::{ChartKind, SortOrder, TimeWindow, ViewError, ViewOverrides, ViewSpec};
use crate::dataset::{AggFn, Dataset, Gazetteer, Key, Predicate};
use crate::viewdata::{self, ViewData};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

/// Scatter plots inline at most this many rows.
pub const SCATTER_ROW_CAP: usize = 5000;

/// Boundary files for maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GeoSource {
    UsStates,
    WorldCountries,
}

impl GeoSource {
    /// Name of the data reference in exported specs.
    pub fn name(self) -> &'static str {
        match self {
            GeoSource::UsStates => "us-states-10m",
            GeoSource::WorldCountries => "world-countries-110m",
        }
    }

    /// TopoJSON object holding the features.
    pub fn feature(self) -> &'static str {
        match self {
            GeoSource::UsStates => "states",
            GeoSource::WorldCountries => "countries",
        }
    }

    pub fn projection(self) -> &'static str {
        match self {
            GeoSource::UsStates => "albersUsa",
            GeoSource::WorldCountries => "equalEarth",
        }
    }

    pub fn topojson(self) -> &'static str {
        match self {
            GeoSource::UsStates => include_str!("../../assets/vendor/us-states-10m.json"),
            GeoSource::WorldCountries => include_str!("../../assets/vendor/world-countries-110m.json"),
        }
    }

    /// US states when at least half the attribute's values are state names.
    pub fn for_attribute(ds: &Dataset, attribute: &str) -> GeoSource {
        let values = ds.category_values(attribute);
        let g = Gazetteer::bundled();
        let states = values.iter().filter(|v| g.is_us_state(v)).count();
        if !values.is_empty() && states * 2 >= values.len() {
            GeoSource::UsStates
        } else {
            GeoSource::WorldCountries
        }
    }
}

/// Field names used in inlined data: `d0`, `d1` for dimensions, `t` for
/// the time axis, then `series`, `value` and `previous`.
pub fn field_map(view: &ViewSpec) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = view
        .dimensions
        .iter()
        .enumerate()
        .map(|(i, d)| (format!("d{i}"), d.clone()))
        .collect();
    if let (Some(t), true) = (&view.temporal, time_axis(view)) {
        out.push(("t".into(), t.clone()));
    }
    out
}

/// Whether the view draws its temporal attribute on an axis.
fn time_axis(view: &ViewSpec) -> bool {
    view.kind == ChartKind::Line || view.window == Some(TimeWindow::YearlyChange)
}

/// Rows inlined into the spec for already computed view data.
pub fn chart_values(view: &ViewSpec, data: &ViewData) -> Vec<Value> {
    let num = |v: f64| Value::from(v);
    match data {
        ViewData::Value { value, previous } => {
            let mut row = Map::new();
            row.insert("value".into(), value.map_or(Value::Null, num));
            if let Some(p) = previous {
                row.insert("previous".into(), num(*p));
            }
            vec![Value::Object(row)]
        }
        ViewData::Groups { rows } => rows
            .iter()
            .map(|r| {
                let mut row = Map::new();
                if time_axis(view) {
                    let t = match r.key.first() {
                        Some(Key::Int(y)) => Value::from(*y),
                        Some(Key::Text(m)) => Value::from(format!("{m}-01")),
                        None => Value::Null,
                    };
                    row.insert("t".into(), t);
                } else {
                    for (i, k) in r.key.iter().enumerate() {
                        row.insert(format!("d{i}"), k.to_json());
                    }
                }
                if let Some(s) = &r.series {
                    row.insert("series".into(), Value::from(s.as_str()));
                }
                row.insert("value".into(), num(r.value));
                if let Some(p) = r.previous {
                    row.insert("previous".into(), num(p));
                }
                Value::Object(row)
            })
            .collect(),
        ViewData::Bins { bins } => bins
            .iter()
            .map(|b| json!({"start": b.start, "end": b.end, "value": b.count}))
            .collect(),
        ViewData::Points { points } => sample_indices(points.len(), SCATTER_ROW_CAP)
            .map(|i| {
                let (row, x, y) = points[i];
                json!({"row": row, "x": x, "y": y})
            })
            .collect(),
    }
}

/// Evenly spaced indices: all of `0..n` when `n <= cap`, otherwise
/// `floor(i * n / cap)` for `i < cap`.
pub fn sample_indices(n: usize, cap: usize) -> impl Iterator<Item = usize> {
    let take = n.min(cap);
    (0..take).map(move |i| if n <= cap { i } else { i * n / cap })
}

pub fn measure_title(view: &ViewSpec) -> String {
    if view.encodes_change() {
        return match view.measures.first() {
            Some(m) => format!("Change in {m}"),
            None => "Change".into(),
        };
    }
    match (view.agg, view.measures.as_slice()) {
        (AggFn::Count, _) | (_, []) => "Number of records".into(),
        (agg, [m]) => format!("{} of {m}", agg.label()),
        (agg, _) => agg.label().to_string(),
    }
}

pub fn view_title(view: &ViewSpec) -> String {
    let measures = view.measures.join(" and ");
    let year_suffix = match view.window {
        Some(TimeWindow::Year { year }) => format!(" ({year})"),
        Some(TimeWindow::YearOverYear { year }) => format!(" ({year} vs. {})", year - 1),
        _ => String::new(),
    };
    let by = if view.dimensions.is_empty() {
        String::new()
    } else {
        format!(" by {}", view.dimensions.join(" and "))
    };
    let body = match view.kind {
        ChartKind::DataSummary if view.encodes_change() => format!("Change in {measures}"),
        ChartKind::DataSummary => match (view.agg, view.measures.first()) {
            (AggFn::Count, _) | (_, None) => "Number of records".into(),
            (AggFn::Sum, Some(m)) => format!("Total {m}"),
            (agg, Some(m)) => format!("{} {m}", agg.label()),
        },
        ChartKind::Scatter => format!("{} vs. {}", view.measures[0], view.measures[1]),
        ChartKind::Histogram => format!("Distribution of {measures}"),
        _ if view.window == Some(TimeWindow::YearlyChange) => format!("Yearly change in {measures}"),
        ChartKind::Line => {
            let t = view.temporal.as_deref().unwrap_or("time");
            format!("{} over {t}", series_title(view))
        }
        _ if view.encodes_change() => format!("Change in {measures}{by}"),
        _ => format!("{}{by}", series_title(view)),
    };
    format!("{body}{year_suffix}")
}

fn series_title(view: &ViewSpec) -> String {
    match (view.agg, view.measures.len()) {
        (AggFn::Count, _) | (_, 0) => "Number of records".into(),
        (agg, _) => format!("{} of {}", agg.label(), view.measures.join(" and ")),
    }
}

/// Spec of a view over the full dataset.
pub fn emit_chart_spec(view: &ViewSpec, ds: &Dataset, colors: &ColorAssignment) -> Result<Value, EmitError> {
    emit_chart_spec_with(view, ds, colors, &ViewOverrides::default(), &[])
}

/// Spec of a view with presentation overrides and row filters applied.
pub fn emit_chart_spec_with(
    view: &ViewSpec,
    ds: &Dataset,
    colors: &ColorAssignment,
    overrides: &ViewOverrides,
    filters: &[Predicate],
) -> Result<Value, EmitError> {
    view.validate(ds).map_err(|e| match e {
        ViewError::Invalid { kind, reason } => EmitError::UnsupportedChartKind { kind, reason },
        other => EmitError::InvalidView(other),
    })?;
    let data = viewdata::compute(ds, view, filters)?;
    let values = chart_values(view, &data);
    let geo = (view.kind == ChartKind::Map).then(|| GeoSource::for_attribute(ds, &view.dimensions[0]));
    Ok(build_spec(view, values, colors, overrides, geo))
}

struct Builder<'a> {
    view: &'a ViewSpec,
    colors: &'a ColorAssignment,
    overrides: &'a ViewOverrides,
    used_colors: Map<String, Value>,
}

impl Builder<'_> {
    fn descending(&self) -> bool {
        self.overrides.sort != Some(SortOrder::Ascending)
    }

    fn sort_by(&self, channel: &str) -> Value {
        if self.descending() {
            Value::from(format!("-{channel}"))
        } else {
            Value::from(channel)
        }
    }

    fn order(&self) -> &'static str {
        if self.descending() {
            "descending"
        } else {
            "ascending"
        }
    }

    fn dim_title(&self, i: usize) -> &str {
        &self.view.dimensions[i]
    }

    fn value_axis(&self) -> Value {
        json!({"field": "value", "type": "quantitative", "title": measure_title(self.view), "scale": {"zero": true}})
    }

    fn measure_color(&mut self, measure: Option<&String>) -> String {
        match measure {
            Some(m) if self.view.agg != AggFn::Count => {
                let c = self.colors.quant(m).to_string();
                self.used_colors.insert(m.clone(), Value::from(c.as_str()));
                c
            }
            _ => COUNT_COLOR.to_string(),
        }
    }

    fn change_color(&self) -> Value {
        let s = &self.colors.change_scale;
        json!({
            "field": "value",
            "type": "quantitative",
            "title": measure_title(self.view),
            "scale": {"scheme": s.scheme, "domainMid": s.domain_mid},
        })
    }

    fn ramp_color(&mut self) -> Value {
        let end = self.measure_color(self.view.measures.first());
        json!({
            "field": "value",
            "type": "quantitative",
            "title": measure_title(self.view),
            "scale": {"range": [RAMP_START, end]},
        })
    }

    fn category_color(&self, field: &str, attribute: &str) -> Value {
        let (domain, range) = self.colors.category_scale(attribute);
        json!({
            "field": field,
            "type": "nominal",
            "title": attribute,
            "scale": {"domain": domain, "range": range},
        })
    }

    fn series_color(&mut self) -> Value {
        let measures = self.view.measures.clone();
        let range: Vec<String> = measures.iter().map(|m| self.measure_color(Some(m))).collect();
        json!({
            "field": "series",
            "type": "nominal",
            "title": "Measure",
            "scale": {"domain": measures, "range": range},
        })
    }

    fn tooltip(&self) -> Value {
        let mut tips: Vec<Value> = field_map(self.view)
            .into_iter()
            .map(|(f, a)| json!({"field": f, "title": a}))
            .collect();
        if self.view.measures.len() > 1 && self.view.kind != ChartKind::Scatter {
            tips.push(json!({"field": "series", "title": "Measure"}));
        }
        tips.push(json!({"field": "value", "type": "quantitative", "title": measure_title(self.view), "format": ",.2f"}));
        if self.view.encodes_change() {
            tips.push(json!({"field": "previous", "type": "quantitative", "title": "Previous", "format": ",.2f"}));
        }
        Value::Array(tips)
    }

    /// Bar-like views: one category axis and one value axis.
    fn bars(&mut self, spec: &mut Map<String, Value>) {
        let v = self.view;
        let swap = self.overrides.swap_axes;
        let (cat_ch, val_ch, offset_ch) = if swap { ("y", "x", "yOffset") } else { ("x", "y", "xOffset") };
        let yearly = v.window == Some(TimeWindow::YearlyChange);
        let cat = if yearly {
            json!({"field": "t", "type": "ordinal", "title": v.temporal, "sort": "ascending"})
        } else if v.kind == ChartKind::StackedBar {
            json!({"field": "d0", "type": "nominal", "title": self.dim_title(0),
                   "sort": {"op": "sum", "field": "value", "order": self.order()}})
        } else {
            json!({"field": "d0", "type": "nominal", "title": self.dim_title(0), "sort": self.sort_by(val_ch)})
        };
        let mut enc = Map::new();
        enc.insert(cat_ch.into(), cat);
        enc.insert(val_ch.into(), self.value_axis());
        let mut mark = json!({"type": "bar"});
        match v.kind {
            ChartKind::GroupedBar if v.measures.len() == 2 => {
                enc.insert(offset_ch.into(), json!({"field": "series"}));
                enc.insert("color".into(), self.series_color());
            }
            ChartKind::GroupedBar => {
                enc.insert(offset_ch.into(), json!({"field": "d1", "sort": "ascending"}));
                enc.insert("color".into(), self.category_color("d1", &v.dimensions[1]));
            }
            ChartKind::StackedBar => {
                enc.insert("color".into(), self.category_color("d1", &v.dimensions[1]));
            }
            _ if v.encodes_change() => {
                enc.insert("color".into(), self.change_color());
            }
            _ => {
                mark["color"] = Value::from(self.measure_color(v.measures.first()));
            }
        }
        enc.insert("tooltip".into(), self.tooltip());
        spec.insert("mark".into(), mark);
        spec.insert("encoding".into(), Value::Object(enc));
    }

    fn line(&mut self, spec: &mut Map<String, Value>) {
        let v = self.view;
        let y = self.value_axis();
        if v.window == Some(TimeWindow::YearlyChange) {
            let x = json!({"field": "t", "type": "ordinal", "title": v.temporal, "sort": "ascending"});
            let line_color = self.measure_color(v.measures.first());
            spec.insert(
                "layer".into(),
                json!([
                    {"mark": {"type": "line", "color": line_color}, "encoding": {"x": x, "y": y}},
                    {"mark": {"type": "point", "filled": true, "size": 80},
                     "encoding": {"x": x, "y": y, "color": self.change_color(), "tooltip": self.tooltip()}},
                ]),
            );
            return;
        }
        let x = json!({"field": "t", "type": "temporal", "timeUnit": "yearmonth", "title": v.temporal});
        let mut enc = json!({"x": x, "y": y, "tooltip": self.tooltip()});
        let mut mark = json!({"type": "line", "point": true});
        if v.measures.len() > 1 {
            enc["color"] = self.series_color();
        } else {
            mark["color"] = Value::from(self.measure_color(v.measures.first()));
        }
        spec.insert("mark".into(), mark);
        spec.insert("encoding".into(), enc);
    }

    fn map(&mut self, spec: &mut Map<String, Value>, values: Vec<Value>, geo: GeoSource) {
        spec.insert(
            "data".into(),
            json!({"name": geo.name(), "format": {"type": "topojson", "feature": geo.feature()}}),
        );
        spec.insert(
            "transform".into(),
            json!([{
                "lookup": "properties.name",
                "from": {"data": {"values": values}, "key": "d0", "fields": ["d0", "value", "previous"]},
            }]),
        );
        spec.insert("projection".into(), json!({"type": geo.projection()}));
        let color = if self.view.encodes_change() {
            self.change_color()
        } else {
            self.ramp_color()
        };
        spec.insert("mark".into(), json!({"type": "geoshape", "stroke": "#ffffff", "strokeWidth": 0.5}));
        spec.insert("encoding".into(), json!({"color": color, "tooltip": self.tooltip()}));
    }
}

fn build_spec(
    view: &ViewSpec,
    values: Vec<Value>,
    colors: &ColorAssignment,
    overrides: &ViewOverrides,
    geo: Option<GeoSource>,
) -> Value {
    let mut b = Builder {
        view,
        colors,
        overrides,
        used_colors: Map::new(),
    };
    let mut spec = Map::new();
    spec.insert("$schema".into(), Value::from(VEGA_LITE_SCHEMA));
    spec.insert("title".into(), Value::from(view_title(view)));
    spec.insert("width".into(), Value::from("container"));
    spec.insert("height".into(), Value::from("container"));
    spec.insert("autosize".into(), json!({"type": "fit", "contains": "padding"}));
    if view.kind != ChartKind::Map {
        spec.insert("data".into(), json!({ "values": values }));
    }

    match view.kind {
        ChartKind::Bar | ChartKind::GroupedBar | ChartKind::StackedBar | ChartKind::DifferenceBar => b.bars(&mut spec),
        ChartKind::Line => b.line(&mut spec),
        ChartKind::Map => b.map(&mut spec, values, geo.expect("maps carry a geo source")),
        ChartKind::Donut => {
            let color = b.category_color("d0", &view.dimensions[0]);
            spec.insert("mark".into(), json!({"type": "arc", "innerRadius": 50}));
            spec.insert(
                "encoding".into(),
                json!({
                    "theta": {"field": "value", "type": "quantitative", "stack": true, "title": measure_title(view)},
                    "color": color,
                    "order": {"field": "value", "type": "quantitative", "sort": b.order()},
                    "tooltip": b.tooltip(),
                }),
            );
            // Slices encode the measure through their angle.
            b.measure_color(view.measures.first());
        }
        ChartKind::Heatmap => {
            let sort = json!({"op": "sum", "field": "value", "order": b.order()});
            let color = b.ramp_color();
            spec.insert("mark".into(), json!({"type": "rect"}));
            spec.insert(
                "encoding".into(),
                json!({
                    "x": {"field": "d0", "type": "nominal", "title": view.dimensions[0], "sort": sort},
                    "y": {"field": "d1", "type": "nominal", "title": view.dimensions[1], "sort": sort},
                    "color": color,
                    "tooltip": b.tooltip(),
                }),
            );
        }
        ChartKind::Histogram => {
            let attr = &view.measures[0];
            let color = b.measure_color(Some(attr));
            spec.insert("mark".into(), json!({"type": "bar", "color": color, "binSpacing": 1}));
            spec.insert(
                "encoding".into(),
                json!({
                    "x": {"field": "start", "type": "quantitative", "bin": {"binned": true}, "title": attr, "scale": {"zero": true}},
                    "x2": {"field": "end"},
                    "y": {"field": "value", "type": "quantitative", "title": "Number of records", "scale": {"zero": true}},
                    "tooltip": [
                        {"field": "start", "type": "quantitative", "title": "From", "format": ",.2f"},
                        {"field": "end", "type": "quantitative", "title": "To", "format": ",.2f"},
                        {"field": "value", "type": "quantitative", "title": "Number of records"},
                    ],
                }),
            );
        }
        ChartKind::Scatter => {
            let color = b.measure_color(Some(&view.measures[1]));
            spec.insert("mark".into(), json!({"type": "point", "filled": true, "opacity": 0.6, "color": color}));
            spec.insert(
                "encoding".into(),
                json!({
                    "x": {"field": "x", "type": "quantitative", "title": view.measures[0], "scale": {"zero": true}},
                    "y": {"field": "y", "type": "quantitative", "title": view.measures[1], "scale": {"zero": true}},
                    "tooltip": [
                        {"field": "x", "type": "quantitative", "title": view.measures[0], "format": ",.2f"},
                        {"field": "y", "type": "quantitative", "title": view.measures[1], "format": ",.2f"},
                    ],
                }),
            );
        }
        ChartKind::DataSummary => {
            let mut mark = json!({"type": "text", "fontSize": 36, "fontWeight": "bold"});
            let mut enc = json!({
                "text": {"field": "value", "type": "quantitative", "format": ",.2f"},
                "tooltip": b.tooltip(),
            });
            if view.encodes_change() {
                enc["color"] = b.change_color();
            } else {
                mark["color"] = Value::from(b.measure_color(view.measures.first()));
            }
            spec.insert("mark".into(), mark);
            spec.insert("encoding".into(), enc);
        }
    }

    let fields: Map<String, Value> = field_map(view)
        .into_iter()
        .map(|(f, a)| (f, Value::from(a)))
        .collect();
    let mut meta = json!({
        "view": view,
        "fields": fields,
        "colors": b.used_colors,
        "diverging": view.encodes_change(),
        "sort": b.order(),
        "zeroBaseline": true,
    });
    if let Some(g) = geo {
        meta["geo"] = json!({"name": g.name(), "feature": g.feature()});
    }
    spec.insert("usermeta".into(), json!({ "medley": meta }));
    Value::Object(spec)
}
