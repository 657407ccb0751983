use super::*;
use crate::canvas::{CanvasElement, ChartKind, ElementSpec, Geometry, TimeWindow, ViewSpec, WidgetKind, WidgetSpec};
use crate::dataset::{load_csv, AggFn, CsvOptions};
use crate::synth::superstore_csv;

fn store() -> Dataset {
    load_csv(superstore_csv(600, 11).as_bytes(), CsvOptions::default()).unwrap()
}

fn canvas_of(views: &[ViewSpec]) -> CanvasState {
    CanvasState {
        elements: views
            .iter()
            .enumerate()
            .map(|(i, v)| CanvasElement {
                id: format!("e{i}"),
                spec: ElementSpec::View(v.clone()),
                geometry: Geometry::new(0, i as u32 * 4, 6, 4),
                overrides: Default::default(),
            })
            .collect(),
        link_overrides: Vec::new(),
    }
}

fn sales_canvas() -> CanvasState {
    canvas_of(&[
        ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("Sales"),
        ViewSpec::new(ChartKind::Map, AggFn::Sum).measure("Sales").dimension("State"),
    ])
}

fn codes(r: &Recommendations) -> Vec<&str> {
    r.collections.iter().map(|c| c.collection.code.as_str()).collect()
}

#[test]
fn implicit_attributes_follow_canvas_order() {
    let mut canvas = sales_canvas();
    canvas.elements.push(CanvasElement {
        id: "w".into(),
        spec: ElementSpec::Widget(WidgetSpec::new(WidgetKind::YearPicker, "Order Date")),
        geometry: Geometry::default(),
        overrides: Default::default(),
    });
    assert_eq!(implicit_attributes(&canvas), ["Sales", "State"]);
    let a = AttrsOfInterest::new(&["State".to_string(), "Profit".to_string()], &canvas);
    assert_eq!(a.implicit, ["Sales"]);
    assert_eq!(a.union, ["State", "Profit", "Sales"]);
}

#[test]
fn change_intent_with_explicit_profit() {
    let ds = store();
    let input = UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]);
    let r = recommend_collections(&ds, Catalog::bundled(), &input, &sales_canvas(), &EngineConfig::default()).unwrap();
    assert_eq!(codes(&r), ["CH1", "CH2"]);
    let ch1 = &r.collections[0];
    assert_eq!(ch1.collection.assignment.slot("Q"), ["Profit"]);
    assert!(ch1.collection.objective.starts_with("YoY change for Profit"));
    assert_eq!((ch1.attr_match, ch1.explicit_match), (1.0, 1.0));
    let ch2 = &r.collections[1];
    assert_eq!((ch2.attr_match, ch2.explicit_match), (1.0, 0.5));
    assert_eq!(ch1.coverage, 0.0);
    assert!(!r.round_robin);
}

#[test]
fn coverage_lifts_collection_partly_on_canvas() {
    let ds = store();
    let input = UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]);
    let config = EngineConfig::default();
    let first = recommend_collections(&ds, Catalog::bundled(), &input, &sales_canvas(), &config).unwrap();
    let ch1 = &first.collections[0].collection;
    let diff = ch1.views.iter().find(|v| v.kind == ChartKind::DifferenceBar).unwrap();
    let map = ch1.views.iter().find(|v| v.kind == ChartKind::Map).unwrap();
    let mut views: Vec<ViewSpec> = sales_canvas().views().cloned().collect();
    views.extend([diff.clone(), map.clone()]);
    let canvas = canvas_of(&views);

    let input = UserInput::new(&["Profit"], &[]);
    let r = recommend_collections(&ds, Catalog::bundled(), &input, &canvas, &config).unwrap();
    let top = &r.collections[0];
    assert_eq!(top.collection.code, "CH1");
    assert_eq!(top.coverage, 2.0 / ch1.views.len() as f64);
    assert_eq!(top.relevance, 1.0 + top.coverage);
    // Views already on the canvas sink to the bottom.
    let tail: Vec<bool> = top.ranked_views.iter().map(|v| v.in_canvas).collect();
    assert_eq!(tail.iter().filter(|&&b| b).count(), 2);
    assert!(tail.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn fully_covered_collection_gets_no_coverage() {
    let ds = store();
    let input = UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]);
    let config = EngineConfig::default();
    let first = recommend_collections(&ds, Catalog::bundled(), &input, &CanvasState::default(), &config).unwrap();
    let ch1 = first.collections[0].collection.clone();
    assert_eq!(coverage(&ch1, &canvas_of(&ch1.views)), 0.0);
    assert_eq!(coverage(&ch1, &canvas_of(&ch1.views[1..])), (ch1.views.len() - 1) as f64 / ch1.views.len() as f64);
    assert_eq!(coverage(&ch1, &CanvasState::default()), 0.0);
}

#[test]
fn round_robin_when_nothing_selected() {
    let ds = store();
    let r = recommend_collections(&ds, Catalog::bundled(), &UserInput::default(), &CanvasState::default(), &EngineConfig::default())
        .unwrap();
    assert!(r.round_robin);
    assert_eq!(r.collections.len(), Catalog::bundled().templates().len());
    let intents: Vec<Intent> = r.collections[..4].iter().map(|c| c.collection.intent).collect();
    assert_eq!(intents, Intent::ROUND_ROBIN);
    let tail = &r.collections[4..];
    assert!(tail
        .windows(2)
        .all(|w| w[0].mean_interestingness >= w[1].mean_interestingness));
    for head in &r.collections[..4] {
        let best = r
            .collections
            .iter()
            .filter(|c| c.collection.intent == head.collection.intent)
            .map(|c| c.mean_interestingness)
            .fold(f64::MIN, f64::max);
        assert_eq!(head.mean_interestingness, best);
    }
}

#[test]
fn unknown_attribute_is_rejected() {
    let ds = store();
    let input = UserInput::new(&["Revenue"], &[]);
    let err = recommend_collections(&ds, Catalog::bundled(), &input, &CanvasState::default(), &EngineConfig::default());
    assert_eq!(err.unwrap_err(), EngineError::UnknownAttribute("Revenue".into()));
}

#[test]
fn no_temporal_attribute_yields_diagnostic() {
    let ds = load_csv(b"Sales,Segment\n1,a\n2,b\n3,a\n", CsvOptions::default()).unwrap();
    let input = UserInput::new(&[], &[Intent::ChangeAnalysis]);
    let r = recommend_collections(&ds, Catalog::bundled(), &input, &CanvasState::default(), &EngineConfig::default()).unwrap();
    assert!(r.collections.is_empty());
    let diag: Vec<&str> = r.diagnostics.iter().map(|d| d.code.as_str()).collect();
    assert_eq!(diag, ["CH1", "CH2", NO_SATISFIABLE_TEMPLATE]);
}

#[test]
fn duplicate_selections_are_ignored() {
    let ds = store();
    let config = EngineConfig::default();
    let canvas = CanvasState::default();
    let a = recommend_collections(&ds, Catalog::bundled(), &UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]), &canvas, &config).unwrap();
    let b = recommend_collections(
        &ds,
        Catalog::bundled(),
        &UserInput::new(&["Profit", "Profit"], &[Intent::ChangeAnalysis, Intent::ChangeAnalysis]),
        &canvas,
        &config,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn jaccard_mode_counts_temporal_primaries() {
    let ds = store();
    let config = EngineConfig {
        attr_match: AttrMatchMode::Jaccard,
        ..EngineConfig::default()
    };
    let input = UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]);
    let r = recommend_collections(&ds, Catalog::bundled(), &input, &CanvasState::default(), &config).unwrap();
    let ch1 = r.collections.iter().find(|c| c.collection.code == "CH1").unwrap();
    // P = {Profit, Order Date}, U = {Profit}.
    assert_eq!(ch1.attr_match, 0.5);
    assert_eq!(codes(&r)[0], "CH1");
}

#[test]
fn change_views_carry_windows() {
    let ds = store();
    let input = UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]);
    let r = recommend_collections(&ds, Catalog::bundled(), &input, &CanvasState::default(), &EngineConfig::default()).unwrap();
    for v in &r.collections[0].collection.views {
        assert_eq!(v.window, Some(TimeWindow::YearOverYear { year: 2022 }));
    }
}
