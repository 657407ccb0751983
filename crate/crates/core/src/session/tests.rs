use std::io::BufReader;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use super::*;
use crate::canvas::{ChartKind, SortOrder, TimeWindow, ViewSpec, WidgetKind, WidgetSpec};
use crate::catalog::Intent;
use crate::dataset::{load_csv, AggFn, CsvOptions};
use crate::synth::superstore_csv;

fn store() -> Arc<Dataset> {
    static DS: OnceLock<Arc<Dataset>> = OnceLock::new();
    DS.get_or_init(|| Arc::new(load_csv(superstore_csv(600, 11).as_bytes(), CsvOptions::default()).unwrap()))
        .clone()
}

fn session() -> Session {
    Session::new("s1", store(), Arc::new(Catalog::bundled().clone()), EngineConfig::default())
}

fn bar(measure: &str, dim: &str) -> ElementSpec {
    ElementSpec::View(ViewSpec::new(ChartKind::Bar, AggFn::Sum).measure(measure).dimension(dim))
}

fn year_picker() -> ElementSpec {
    ElementSpec::Widget(WidgetSpec::new(WidgetKind::YearPicker, "Order Date"))
}

#[test]
fn added_elements_get_ids_and_free_slots() {
    let mut s = session();
    let a = s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let b = s.add_element(bar("Profit", "Segment"), None, None).unwrap();
    let c = s.add_element(year_picker(), None, None).unwrap();
    assert_eq!((a.as_str(), b.as_str(), c.as_str()), ("e1", "e2", "e3"));
    let geo: Vec<Geometry> = s.canvas().elements.iter().map(|e| e.geometry).collect();
    assert_eq!(geo, [Geometry::new(0, 0, 6, 4), Geometry::new(6, 0, 6, 4), Geometry::new(0, 4, 3, 2)]);
    // Two views and one widget: 6 ordered pairs, widget targets invalid.
    let links = s.links();
    assert_eq!(links.len(), 6);
    assert_eq!(links.iter().filter(|l| !l.valid).count(), 2);
}

#[test]
fn generated_ids_skip_ids_in_use() {
    let mut s = session();
    s.add_element(bar("Sales", "Segment"), None, Some("e2".into())).unwrap();
    assert_eq!(s.add_element(bar("Profit", "Segment"), None, None).unwrap(), "e3");
    assert_eq!(
        s.add_element(bar("Profit", "Region"), None, Some("e2".into())),
        Err(SessionError::DuplicateId("e2".into()))
    );
}

#[test]
fn invalid_elements_leave_the_canvas_unchanged() {
    let mut s = session();
    s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let before = s.canvas().clone();
    let seq = s.seq();
    assert_eq!(
        s.add_element(bar("Revenue", "Segment"), None, None),
        Err(SessionError::UnknownAttribute("Revenue".into()))
    );
    assert!(matches!(
        s.add_element(ElementSpec::Widget(WidgetSpec::new(WidgetKind::YearPicker, "Sales")), None, None),
        Err(SessionError::InvalidElement(_))
    ));
    assert!(matches!(
        s.add_element(bar("Sales", "Region"), Some(Geometry::new(8, 0, 6, 3)), None),
        Err(SessionError::InvalidGeometry(_))
    ));
    assert_eq!(s.canvas(), &before);
    assert_eq!(s.seq(), seq);
}

#[test]
fn unknown_elements() {
    let mut s = session();
    assert_eq!(s.remove_element("nope"), Err(SessionError::UnknownElement("nope".into())));
    assert_eq!(
        s.move_resize("nope", Geometry::new(0, 0, 1, 1)),
        Err(SessionError::UnknownElement("nope".into()))
    );
    assert!(matches!(
        s.set_link_mode("a", "b", LinkMode::Filter),
        Err(SessionError::Interaction(InteractionError::UnknownElement(_)))
    ));
}

#[test]
fn removing_an_element_drops_its_overrides() {
    let mut s = session();
    let a = s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let b = s.add_element(bar("Profit", "Segment"), None, None).unwrap();
    let c = s.add_element(bar("Profit", "Region"), None, None).unwrap();
    s.set_link_mode(&a, &b, LinkMode::Filter).unwrap();
    s.set_link_mode(&c, &b, LinkMode::Filter).unwrap();
    assert_eq!(s.canvas().link_overrides.len(), 2);
    s.remove_element(&a).unwrap();
    assert_eq!(s.canvas().link_overrides.len(), 1);
    assert_eq!(s.canvas().link_override(&c, &b), Some(LinkMode::Filter));
}

#[test]
fn link_modes_follow_the_truth_table() {
    let mut s = session();
    let summary = s
        .add_element(ElementSpec::View(ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("Sales")), None, None)
        .unwrap();
    let a = s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let b = s.add_element(bar("Profit", "Region"), None, None).unwrap();
    assert!(matches!(
        s.set_link_mode(&summary, &a, LinkMode::Filter),
        Err(SessionError::Interaction(InteractionError::ModeNotAllowed { .. }))
    ));
    assert!(matches!(
        s.set_link_mode(&a, &b, LinkMode::Highlight),
        Err(SessionError::Interaction(InteractionError::ModeNotAllowed { .. }))
    ));
    let link = s.set_link_mode(&a, &b, LinkMode::Filter).unwrap();
    assert_eq!(link.active_mode, Some(LinkMode::Filter));
}

#[test]
fn patches_update_geometry_and_view_options() {
    let mut s = session();
    let a = s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let w = s.add_element(year_picker(), None, None).unwrap();
    s.move_resize(&a, Geometry::new(2, 1, 10, 5)).unwrap();
    let overrides = ViewOverrides {
        sort: Some(SortOrder::Ascending),
        swap_axes: true,
    };
    s.patch_element(&a, ElementPatch { geometry: None, overrides: Some(overrides) }).unwrap();
    let e = s.canvas().get(&a).unwrap();
    assert_eq!((e.geometry, e.overrides), (Geometry::new(2, 1, 10, 5), overrides));
    assert!(matches!(
        s.patch_element(&w, ElementPatch { geometry: None, overrides: Some(overrides) }),
        Err(SessionError::InvalidElement(_))
    ));
}

#[test]
fn input_is_validated_and_normalized() {
    let mut s = session();
    assert_eq!(
        s.update_input(UserInput::new(&["Revenue"], &[])),
        Err(SessionError::UnknownAttribute("Revenue".into()))
    );
    s.update_input(UserInput::new(&["Profit", "Profit"], &[Intent::ChangeAnalysis, Intent::ChangeAnalysis]))
        .unwrap();
    assert_eq!(s.input(), &UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]));
}

#[test]
fn intent_selection_narrows_recommendations() {
    let mut s = session();
    s.update_input(UserInput::new(&[], &[Intent::ChangeAnalysis])).unwrap();
    let r = s.refresh_recommendations().unwrap();
    assert!(!r.collections.is_empty());
    assert!(r.collections.iter().all(|c| c.collection.intent == Intent::ChangeAnalysis));

    s.update_input(UserInput::default()).unwrap();
    let r = s.refresh_recommendations().unwrap();
    let intents: std::collections::BTreeSet<Intent> = r.collections.iter().map(|c| c.collection.intent).collect();
    assert_eq!(intents.len(), 4);
}

#[test]
fn recommendations_are_cached_until_a_mutation() {
    let mut s = session();
    assert!(s.cached_recommendations().is_none());
    let first = s.refresh_recommendations().unwrap();
    let again = s.refresh_recommendations().unwrap();
    assert!(Arc::ptr_eq(&first, &again));
    assert_eq!(s.recomputations(), 1);

    let a = s.add_element(bar("Sales", "Segment"), None, None).unwrap();
    let (cached, stale) = s.cached_recommendations().unwrap();
    assert!(stale && Arc::ptr_eq(&cached, &first));
    s.refresh_recommendations().unwrap();
    assert_eq!(s.recomputations(), 2);

    for m in [
        Mutation::PatchElement { id: a.clone(), patch: ElementPatch { geometry: Some(Geometry::new(0, 0, 4, 4)), overrides: None } },
        Mutation::UpdateInput { input: UserInput::new(&["Profit"], &[]) },
        Mutation::RemoveElement { id: a.clone() },
    ] {
        let before = s.recomputations();
        s.commit(m).unwrap();
        assert!(s.cached_recommendations().unwrap().1);
        s.refresh_recommendations().unwrap();
        assert_eq!(s.recomputations(), before + 1);
    }

    // A rejected mutation changes nothing, so the cache stays fresh.
    assert!(s.remove_element("nope").is_err());
    s.refresh_recommendations().unwrap();
    assert_eq!(s.recomputations(), 5);
}

#[test]
fn profit_selection_with_sales_canvas_puts_profit_change_first() {
    let mut s = session();
    s.add_element(ElementSpec::View(ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("Sales")), None, None)
        .unwrap();
    s.add_element(
        ElementSpec::View(ViewSpec::new(ChartKind::Map, AggFn::Sum).measure("Sales").dimension("State")),
        None,
        None,
    )
    .unwrap();
    s.update_input(UserInput::new(&["Profit"], &[])).unwrap();
    let r = s.refresh_recommendations().unwrap();
    let change: Vec<&RankedCollection> =
        r.collections.iter().filter(|c| c.collection.intent == Intent::ChangeAnalysis).collect();
    assert_eq!(change[0].collection.code, "CH1");
    assert_eq!(change[0].collection.assignment.slot("Q"), ["Profit"]);
}

#[test]
fn adding_a_collection_appends_ranked_views_then_widgets() {
    let mut s = session();
    s.update_input(UserInput::new(&["Profit"], &[Intent::ChangeAnalysis])).unwrap();
    let r = s.refresh_recommendations().unwrap();
    let ch1 = r.collections.iter().find(|c| c.collection.code == "CH1").unwrap();
    let ids = s.add_collection(ch1).unwrap();
    let n_views = ch1.ranked_views.len();
    assert_eq!(ids.len(), n_views + ch1.collection.widgets.len());
    assert!(ch1.collection.widgets.iter().any(|w| w.kind == WidgetKind::YearPicker));
    let placed: Vec<&ElementSpec> = s.canvas().elements.iter().map(|e| &e.spec).collect();
    for (i, rv) in ch1.ranked_views.iter().enumerate() {
        assert_eq!(placed[i], &ElementSpec::View(rv.view.clone()));
    }
    assert!(placed[n_views..].iter().all(|e| e.is_widget()));

    // Adding it again places nothing new.
    assert_eq!(s.add_collection(ch1).unwrap(), Vec::<String>::new());
}

#[test]
fn an_added_view_moves_to_the_end_of_its_collection() {
    let mut s = session();
    s.update_input(UserInput::new(&["Profit"], &[Intent::ChangeAnalysis])).unwrap();
    let r = s.refresh_recommendations().unwrap();
    let ch1 = r.collections.iter().find(|c| c.collection.code == "CH1").unwrap();
    let first = ch1.ranked_views[0].view.clone();
    s.add_element(ElementSpec::View(first.clone()), None, None).unwrap();
    let r = s.refresh_recommendations().unwrap();
    let ch1 = r.collections.iter().find(|c| c.collection.code == "CH1").unwrap();
    let last = ch1.ranked_views.last().unwrap();
    assert_eq!(last.view, first);
    assert!(last.in_canvas);
}

#[test]
fn change_views_on_the_canvas_accept_year_window_views() {
    let mut s = session();
    let v = ViewSpec::new(ChartKind::DifferenceBar, AggFn::Sum)
        .measure("Profit")
        .dimension("Category")
        .over_time("Order Date")
        .window(TimeWindow::YearOverYear { year: 2022 });
    s.add_element(ElementSpec::View(v), None, None).unwrap();
    assert_eq!(s.canvas().elements.len(), 1);
}

fn snapshot(s: &mut Session) -> String {
    let r = s.refresh_recommendations().unwrap();
    serde_json::to_string(&(s.input(), s.canvas(), s.links(), &*r)).unwrap()
}

#[test]
fn replaying_a_log_reproduces_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s1.ndjson");
    let catalog = Arc::new(Catalog::bundled().clone());
    let mut s = Session::with_log("s1", store(), catalog.clone(), EngineConfig::default(), &path).unwrap();
    let a = s.add_element(bar("Sales", "Region"), None, None).unwrap();
    let b = s.add_element(bar("Profit", "Region"), None, None).unwrap();
    s.set_link_mode(&a, &b, LinkMode::Filter).unwrap();
    s.update_input(UserInput::new(&["Profit"], &[])).unwrap();
    assert!(s.remove_element("ghost").is_err());
    let r = s.refresh_recommendations().unwrap();
    s.add_collection(&r.collections[0]).unwrap();
    s.move_resize(&b, Geometry::new(0, 20, 12, 3)).unwrap();
    s.remove_element(&a).unwrap();
    let expected = snapshot(&mut s);

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, s.seq());
    assert!(lines[0].starts_with(r#"{"seq":1,"op":"open","sessionId":"s1","datasetId":"#));

    let mut replayed =
        Session::replay(BufReader::new(text.as_bytes()), store(), catalog.clone(), EngineConfig::default()).unwrap();
    assert_eq!(replayed.id(), "s1");
    assert_eq!(replayed.seq(), s.seq());
    assert_eq!(snapshot(&mut replayed), expected);

    // Generated ids continue where the original session would.
    let next = s.add_element(bar("Quantity", "Region"), None, None).unwrap();
    assert_eq!(replayed.add_element(bar("Quantity", "Region"), None, None).unwrap(), next);
}

#[test]
fn reopened_logs_continue_the_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s2.ndjson");
    let catalog = Arc::new(Catalog::bundled().clone());
    let mut s = Session::with_log("s2", store(), catalog.clone(), EngineConfig::default(), &path).unwrap();
    s.add_element(bar("Sales", "Region"), None, None).unwrap();
    drop(s);

    let read = || std::fs::read_to_string(&path).unwrap();
    let replay = |text: String| {
        Session::replay(BufReader::new(text.as_bytes()), store(), catalog.clone(), EngineConfig::default()).unwrap()
    };
    let mut s = replay(read()).reopen_log(&path).unwrap();
    s.add_element(bar("Profit", "Region"), None, None).unwrap();
    let expected = snapshot(&mut s);
    drop(s);

    let text = read();
    let seqs: Vec<u64> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["seq"].as_u64().unwrap())
        .collect();
    assert_eq!(seqs, [1, 2, 3]);
    assert_eq!(snapshot(&mut replay(text)), expected);

    let missing = replay(read()).reopen_log(&dir.path().join("gone.ndjson"));
    assert!(matches!(missing, Err(SessionError::Log(_))));
}

#[test]
fn replay_rejects_foreign_or_broken_logs() {
    let catalog = Arc::new(Catalog::bundled().clone());
    let other = Arc::new(load_csv(superstore_csv(50, 1).as_bytes(), CsvOptions::default()).unwrap());
    let open = format!(r#"{{"seq":1,"op":"open","sessionId":"s","datasetId":"{}"}}"#, store().id());
    let replay = |text: String, ds: Arc<Dataset>| {
        Session::replay(BufReader::new(text.as_bytes()), ds, catalog.clone(), EngineConfig::default())
    };
    assert!(matches!(replay(open.clone(), other), Err(SessionError::Log(_))));
    assert!(matches!(replay(String::new(), store()), Err(SessionError::Log(_))));
    let skipped = format!("{open}\n{}", r#"{"seq":3,"op":"removeElement","id":"e1"}"#);
    assert!(matches!(replay(skipped, store()), Err(SessionError::Log(_))));
    let bad = format!("{open}\n{}", r#"{"seq":2,"op":"removeElement","id":"e1"}"#);
    assert_eq!(replay(bad, store()).unwrap_err(), SessionError::UnknownElement("e1".into()));
}

#[test]
fn logs_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.ndjson");
    std::fs::write(&path, "existing\n").unwrap();
    let r = Session::with_log("s", store(), Arc::new(Catalog::bundled().clone()), EngineConfig::default(), &path);
    assert!(matches!(r, Err(SessionError::Log(_))));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "existing\n");
}

#[test]
fn free_slot_fills_gaps_first() {
    let occupied = [Geometry::new(0, 0, 4, 2), Geometry::new(8, 0, 4, 2)];
    assert_eq!(free_slot(&occupied, 4, 2), Geometry::new(4, 0, 4, 2));
    assert_eq!(free_slot(&occupied, 6, 2), Geometry::new(0, 2, 6, 2));
    assert_eq!(free_slot(&[], 20, 1), Geometry::new(0, 0, 12, 1));
}

#[derive(Debug, Clone)]
enum Step {
    Add(usize),
    Remove(usize),
    Move(usize, u32),
    Link(usize, usize, bool),
    Input(usize),
}

const ELEMENTS: usize = 6;

fn element(i: usize) -> ElementSpec {
    match i % ELEMENTS {
        0 => bar("Sales", "Region"),
        1 => bar("Profit", "Segment"),
        2 => year_picker(),
        3 => ElementSpec::View(ViewSpec::new(ChartKind::Map, AggFn::Sum).measure("Profit").dimension("State")),
        4 => ElementSpec::View(ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("Sales")),
        _ => ElementSpec::View(
            ViewSpec::new(ChartKind::Line, AggFn::Sum).measure("Quantity").over_time("Order Date"),
        ),
    }
}

fn inputs(i: usize) -> UserInput {
    match i % 4 {
        0 => UserInput::default(),
        1 => UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]),
        2 => UserInput::new(&["Region", "Sales"], &[]),
        _ => UserInput::new(&["Revenue"], &[]),
    }
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        3 => (0..ELEMENTS).prop_map(Step::Add),
        1 => (0..8usize).prop_map(Step::Remove),
        1 => (0..8usize, 0..12u32).prop_map(|(i, x)| Step::Move(i, x)),
        2 => (0..8usize, 0..8usize, any::<bool>()).prop_map(|(a, b, f)| Step::Link(a, b, f)),
        1 => (0..4usize).prop_map(Step::Input),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Any mutation sequence, including rejected steps, replays to the same
    /// canvas, links and recommendations.
    #[test]
    fn replay_is_deterministic(steps in proptest::collection::vec(step(), 1..14)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let catalog = Arc::new(Catalog::bundled().clone());
        let mut s = Session::with_log("p", store(), catalog.clone(), EngineConfig::default(), &path).unwrap();
        for st in steps {
            let id = |s: &Session, i: usize| {
                let els = &s.canvas().elements;
                if els.is_empty() { "missing".to_string() } else { els[i % els.len()].id.clone() }
            };
            let _ = match st {
                Step::Add(i) => s.add_element(element(i), None, None).map(|_| ()),
                Step::Remove(i) => { let id = id(&s, i); s.remove_element(&id) }
                Step::Move(i, x) => { let id = id(&s, i); s.move_resize(&id, Geometry::new(x, 0, 1, 1)) }
                Step::Link(a, b, f) => {
                    let (a, b) = (id(&s, a), id(&s, b));
                    let mode = if f { LinkMode::Filter } else { LinkMode::Highlight };
                    s.set_link_mode(&a, &b, mode).map(|_| ())
                }
                Step::Input(i) => s.update_input(inputs(i)),
            };
        }
        let expected = snapshot(&mut s);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut r = Session::replay(BufReader::new(text.as_bytes()), store(), catalog, EngineConfig::default()).unwrap();
        prop_assert_eq!(snapshot(&mut r), expected);
    }
}
