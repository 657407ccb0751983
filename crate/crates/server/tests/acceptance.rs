//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier criterion fails. Exits non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use medley_core::canvas::{CanvasElement, CanvasState, ChartKind, ElementSpec, Geometry, ViewSpec, WidgetKind, WidgetSpec};
use medley_core::catalog::{enumerate_attribute_sets, populate_collection, Catalog, EnumerationContext, Intent};
use medley_core::config::EngineConfig;
use medley_core::dataset::{load_csv, AggFn, AttrType, CsvOptions, Dataset};
use medley_core::emitter::{assign_colors, emit_chart_spec};
use medley_core::engine::{recommend_collections, select_display_set, Recommendations, ScoreCache, UserInput};
use medley_core::interactions::{classify_pair, shares_dimension};
use medley_core::interestingness::{pearson, penalty_for, smoothed_z_score_peaks, MetricParams};
use medley_core::synth::{random_table_csv, superstore_csv, TableShape};
use medley_core::viewdata::{self, ViewData};
use medley_server::{router, AppState, ServerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 scenario replay", scenario_replay),
        ("2 tie-break replay", tie_break_replay),
        ("3 coverage replay", coverage_replay),
        ("4 display-set oracle", display_set_oracle),
        ("5 interaction truth table", interaction_truth_table),
        ("6 template degradation", template_degradation),
        ("7 consistency suite", consistency_suite),
        ("8 metric properties", metric_properties),
        ("9 determinism", determinism),
        ("10 desk-scale performance", desk_scale_performance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// Service helpers

struct Service {
    app: Router,
    rt: tokio::runtime::Runtime,
}

impl Service {
    fn new() -> Self {
        Service {
            app: router(AppState::new(ServerConfig::default(), Catalog::bundled().clone())),
            rt: tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap(),
        }
    }

    fn send(&self, method: Method, uri: &str, content_type: &str, body: Vec<u8>) -> Result<(StatusCode, Value), String> {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header(header::CONTENT_TYPE, content_type)
            .body(Body::from(body))
            .unwrap();
        self.rt.block_on(async {
            let resp = self.app.clone().oneshot(req).await.unwrap();
            let status = resp.status();
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            let value = serde_json::from_slice(&bytes).map_err(|e| format!("{uri}: {e}"))?;
            Ok((status, value))
        })
    }

    fn json(&self, method: Method, uri: &str, body: Value) -> Result<Value, String> {
        let (status, value) = self.send(method, uri, "application/json", body.to_string().into_bytes())?;
        ensure!(status.is_success(), "{uri} returned {status}: {value}");
        Ok(value)
    }

    fn get(&self, uri: &str) -> Result<Value, String> {
        let (status, value) = self.send(Method::GET, uri, "application/json", Vec::new())?;
        ensure!(status.is_success(), "{uri} returned {status}: {value}");
        Ok(value)
    }

    /// Uploads the scenario table and opens a session holding a Sales summary
    /// and a Sales-by-State map.
    fn scenario_session(&self) -> Result<String, String> {
        let (status, ds) = self.send(Method::POST, "/datasets", "text/csv", superstore_csv(1000, 7).into_bytes())?;
        ensure!(status == StatusCode::CREATED, "upload returned {status}");
        let types: Vec<&str> = ds["attributes"].as_array().unwrap().iter().map(|a| a["type"].as_str().unwrap()).collect();
        let count = |t: &str| types.iter().filter(|x| **x == t).count();
        ensure!(
            (types.len(), count("Q"), count("C"), count("G"), count("T")) == (12, 4, 6, 1, 1),
            "dataset shape is {types:?}"
        );
        let s = self.json(Method::POST, "/sessions", json!({"datasetId": ds["datasetId"]}))?;
        let sid = s["sessionId"].as_str().unwrap().to_string();
        let elements = format!("/sessions/{sid}/canvas/elements");
        self.json(Method::POST, &elements, json!({"spec": {"element": "view", "kind": "DataSummary", "measures": ["Sales"], "agg": "Sum"}}))?;
        self.json(
            Method::POST,
            &elements,
            json!({"spec": {"element": "view", "kind": "Map", "measures": ["Sales"], "dimensions": ["State"], "agg": "Sum"}}),
        )?;
        Ok(sid)
    }

    fn recommend(&self, sid: &str, input: Value) -> Result<Value, String> {
        self.json(Method::PATCH, &format!("/sessions/{sid}/input"), input)?;
        self.get(&format!("/sessions/{sid}/recommendations?refresh=true&charts=false"))
    }
}

fn codes(body: &Value) -> Vec<String> {
    body["collections"].as_array().unwrap().iter().map(|c| c["code"].as_str().unwrap().to_string()).collect()
}

fn collection<'a>(body: &'a Value, code: &str) -> Option<&'a Value> {
    body["collections"].as_array().unwrap().iter().find(|c| c["code"] == code)
}

// ---------------------------------------------------------------------------
// 1-3: scenario

fn scenario_replay() -> Outcome {
    let start = Instant::now();
    let svc = Service::new();
    let sid = svc.scenario_session()?;
    let body = svc.recommend(&sid, json!({"explicitAttrs": ["Profit"], "intents": ["ChangeAnalysis"]}))?;
    let elapsed = start.elapsed();
    let got = codes(&body);
    ensure!(got == ["CH1", "CH2"], "collections {got:?}");
    let ch1 = &body["collections"][0];
    let objective = ch1["objective"].as_str().unwrap();
    ensure!(objective.starts_with("YoY change for Profit"), "objective {objective:?}");
    ensure!(ch1["assignment"]["Q"] == json!(["Profit"]), "CH1 Q slot {}", ch1["assignment"]["Q"]);
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("[CH1, CH2], objective {objective:?}, {elapsed:.2?}"))
}

fn tie_break_replay() -> Outcome {
    let svc = Service::new();
    let sid = svc.scenario_session()?;
    let body = svc.recommend(&sid, json!({"explicitAttrs": ["Profit"], "intents": ["ChangeAnalysis"]}))?;
    let (ch1, ch2) = (&body["collections"][0], &body["collections"][1]);
    let f = |c: &Value, k: &str| c[k].as_f64().unwrap();
    ensure!(f(ch1, "attrMatch") == 1.0 && f(ch2, "attrMatch") == 1.0, "attrMatch {} / {}", ch1["attrMatch"], ch2["attrMatch"]);
    ensure!(f(ch1, "relevance") == f(ch2, "relevance"), "relevance differs");
    ensure!(
        f(ch1, "explicitMatch") == 1.0 && f(ch2, "explicitMatch") == 0.5,
        "explicitMatch {} / {}",
        ch1["explicitMatch"],
        ch2["explicitMatch"]
    );
    ensure!(ch1["code"] == "CH1", "first is {}", ch1["code"]);
    Ok("attrMatch 1.0 = 1.0, explicitMatch 1.0 > 0.5, CH1 first".into())
}

fn coverage_replay() -> Outcome {
    let svc = Service::new();
    let sid = svc.scenario_session()?;
    let first = svc.recommend(&sid, json!({"explicitAttrs": ["Profit"], "intents": ["ChangeAnalysis"]}))?;
    let ch1 = collection(&first, "CH1").ok_or("CH1 missing")?;
    let views: Vec<Value> = ch1["views"].as_array().unwrap().iter().map(|v| v["view"].clone()).collect();
    let diff = views.iter().find(|v| v["kind"] == "DifferenceBar").ok_or("no difference bar")?;
    let map = views.iter().find(|v| v["kind"] == "Map").ok_or("no change map")?;
    let elements = format!("/sessions/{sid}/canvas/elements");
    for v in [diff, map] {
        let mut spec = v.clone();
        spec["element"] = json!("view");
        svc.json(Method::POST, &elements, json!({"spec": spec}))?;
    }

    let body = svc.recommend(&sid, json!({"intents": []}))?;
    let top = &body["collections"][0];
    ensure!(top["code"] == "CH1", "top is {} of {:?}", top["code"], codes(&body));
    let expected = 2.0 / views.len() as f64;
    let cov = top["coverage"].as_f64().unwrap();
    ensure!((cov - expected).abs() < 1e-12, "coverage {cov} vs {expected}");
    let am = top["attrMatch"].as_f64().unwrap();
    let peers: Vec<&Value> = body["collections"].as_array().unwrap()[1..]
        .iter()
        .filter(|c| c["attrMatch"].as_f64() == Some(am))
        .collect();
    ensure!(!peers.is_empty(), "no other collection with attrMatch {am}");
    ensure!(
        peers.iter().all(|c| c["coverage"].as_f64().unwrap() < cov),
        "a peer has coverage >= {cov}"
    );

    // Place the rest of CH1; a fully contained collection gets no coverage.
    for v in &views {
        if v == diff || v == map {
            continue;
        }
        let mut spec = v.clone();
        spec["element"] = json!("view");
        svc.json(Method::POST, &elements, json!({"spec": spec}))?;
    }
    let full = svc.get(&format!("/sessions/{sid}/recommendations?refresh=true&charts=false"))?;
    let ch1 = collection(&full, "CH1").ok_or("CH1 missing after full add")?;
    ensure!(
        ch1["views"].as_array().unwrap().iter().all(|v| v["inCanvas"] == true),
        "CH1 views changed after the canvas grew"
    );
    ensure!(ch1["coverage"] == json!(0.0), "full coverage term {}", ch1["coverage"]);
    Ok(format!(
        "CH1 first with coverage 2/{} over {} equal-attrMatch peers; full containment gives 0",
        views.len(),
        peers.len()
    ))
}

// ---------------------------------------------------------------------------
// 4: display-set oracle

fn random_fixture(seed: u64, max_attrs: usize, max_rows: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = TableShape::random(&mut rng, max_attrs, max_rows);
    load_csv(random_table_csv(shape, seed).as_bytes(), CsvOptions::default()).unwrap()
}

fn oracle_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Pearson by the textbook sum formula.
fn oracle_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    if den == 0.0 || !den.is_finite() {
        0.0
    } else {
        (n * sxy - sx * sy) / den
    }
}

/// Peak and drop runs of the smoothed z-score detector.
fn oracle_peaks(series: &[f64], p: &MetricParams) -> usize {
    if series.len() <= p.lag {
        return 0;
    }
    let mut window: Vec<f64> = series[..p.lag].to_vec();
    let mut last = series[p.lag - 1];
    let mut runs = 0;
    let mut prev_flag = false;
    for &x in &series[p.lag..] {
        let n = window.len() as f64;
        let mean = window.iter().sum::<f64>() / n;
        let sd = (window.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n).sqrt();
        let excess = (x - mean).abs() - p.threshold * sd;
        let flag = excess > 1e-9 * (1.0 + mean.abs());
        if flag && !prev_flag {
            runs += 1;
        }
        prev_flag = flag;
        let entry = if flag { p.influence * x + (1.0 - p.influence) * last } else { x };
        last = entry;
        window.remove(0);
        window.push(entry);
    }
    runs
}

/// Raw score of one view, or `None` for views without a metric.
fn oracle_raw(view: &ViewSpec, ds: &Dataset, explicit: &[String], p: &MetricParams) -> Option<f64> {
    if view.kind == ChartKind::DataSummary {
        return None;
    }
    let Ok(data) = viewdata::compute(ds, view, &[]) else {
        return Some(0.0);
    };
    let base = match (view.kind, &data) {
        (ChartKind::Scatter, ViewData::Points { points }) => {
            let xs: Vec<f64> = points.iter().map(|q| q.1).collect();
            let ys: Vec<f64> = points.iter().map(|q| q.2).collect();
            if xs.len() < 2 {
                0.0
            } else {
                oracle_pearson(&xs, &ys).abs().min(1.0)
            }
        }
        (ChartKind::Line, ViewData::Groups { rows }) => {
            let mut series: Vec<(Option<String>, Vec<f64>)> = Vec::new();
            for r in rows {
                match series.iter_mut().find(|(s, _)| *s == r.series) {
                    Some((_, v)) => v.push(r.value),
                    None => series.push((r.series.clone(), vec![r.value])),
                }
            }
            series.iter().map(|(_, v)| oracle_peaks(v, p)).sum::<usize>() as f64
        }
        (_, d) => oracle_std(&d.values()),
    };
    let mut penalty = 1.0;
    for d in &view.dimensions {
        let Some(a) = ds.attribute(d) else { continue };
        if !matches!(a.attr_type, AttrType::Categorical | AttrType::Geographic) || explicit.contains(&a.name) {
            continue;
        }
        let card = view.limit.map_or(a.cardinality, |l| a.cardinality.min(l));
        if card > p.penalty_cardinality {
            penalty *= p.penalty_cardinality as f64 / card as f64;
        }
    }
    Some(base * penalty)
}

fn display_set_oracle() -> Outcome {
    let start = Instant::now();
    let params = MetricParams::default();
    let catalog = Catalog::bundled();
    let (mut compared, mut candidates_seen) = (0, 0);
    for fixture in 0..25u64 {
        let ds = random_fixture(1000 + fixture, 8, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(fixture);
        let explicit: Vec<String> = ds
            .attributes()
            .iter()
            .filter(|_| rng.gen_bool(0.25))
            .map(|a| a.name.clone())
            .collect();
        let ctx = EnumerationContext {
            dataset: &ds,
            interest: &explicit,
            explicit: &explicit,
            params: &params,
            cap: EngineConfig::default().enumeration_cap,
        };
        for template in catalog.templates() {
            let candidates = enumerate_attribute_sets(template, &ctx);
            let engine = select_display_set(template, &candidates, &ds, &explicit, &params, &mut ScoreCache::new());

            // Brute force: score every populated candidate from scratch.
            let mut rows: Vec<(usize, Vec<usize>, Vec<Option<f64>>)> = Vec::new();
            for (i, a) in candidates.iter().enumerate() {
                if let Ok(c) = populate_collection(template, a, &ds) {
                    let raws = c.views.iter().map(|v| oracle_raw(v, &ds, &explicit, &params)).collect();
                    rows.push((i, c.view_recipes.clone(), raws));
                }
            }
            candidates_seen += candidates.len();
            let Some(engine) = engine else {
                ensure!(rows.is_empty(), "fixture {fixture} {}: engine found no display set", template.code);
                continue;
            };
            let mut norm: Vec<Vec<f64>> = rows.iter().map(|r| vec![0.5; r.2.len()]).collect();
            for recipe in 0..template.views.len() {
                let cells: Vec<(usize, usize, f64)> = rows
                    .iter()
                    .enumerate()
                    .flat_map(|(ri, r)| {
                        r.1.iter()
                            .enumerate()
                            .filter(move |(_, &rc)| rc == recipe)
                            .filter_map(move |(vi, _)| r.2[vi].map(|raw| (ri, vi, raw)))
                    })
                    .collect();
                let lo = cells.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
                let hi = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
                for (ri, vi, raw) in cells {
                    norm[ri][vi] = if hi > lo { (raw - lo) / (hi - lo) } else { 0.5 };
                }
            }
            let means: Vec<f64> = norm.iter().map(|n| n.iter().sum::<f64>() / n.len() as f64).collect();
            let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pick = means.iter().position(|&m| m == best).unwrap();
            ensure!(
                rows[pick].0 == engine.index,
                "fixture {fixture} {}: oracle picks candidate {} (mean {best}), engine {} (mean {})",
                template.code,
                rows[pick].0,
                engine.index,
                engine.mean_interestingness
            );
            ensure!(
                (best - engine.mean_interestingness).abs() < 1e-9,
                "fixture {fixture} {}: mean {best} vs {}",
                template.code,
                engine.mean_interestingness
            );
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    ensure!(compared > 0, "nothing compared");
    Ok(format!("{compared}/{compared} template selections agree over {candidates_seen} candidate sets, {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 5: interaction truth table

#[derive(Debug, Clone, Copy)]
enum Kind {
    View(ChartKind),
    Widget,
}

fn element(id: &str, kind: Kind, dimension: &str) -> CanvasElement {
    let spec = match kind {
        Kind::View(k) => ElementSpec::View(ViewSpec::new(k, AggFn::Sum).measure("M").dimension(dimension)),
        Kind::Widget => ElementSpec::Widget(WidgetSpec::new(WidgetKind::MultiSelect, dimension)),
    };
    CanvasElement {
        id: id.into(),
        spec,
        geometry: Geometry::default(),
        overrides: Default::default(),
    }
}

fn interaction_truth_table() -> Outcome {
    let alphabet: Vec<Kind> = ChartKind::ALL.iter().map(|&k| Kind::View(k)).chain([Kind::Widget]).collect();
    let (mut cells, mut mismatches) = (0, Vec::new());
    for &s in &alphabet {
        for &t in &alphabet {
            for shared in [true, false] {
                let src = element("s", s, "A");
                let dst = element("t", t, if shared { "A" } else { "B" });
                assert_eq!(shares_dimension(&src.spec, &dst.spec), shared);
                let link = classify_pair(&src, &dst).map_err(|e| e.to_string())?;
                let got: Vec<String> = link.allowed_modes.iter().map(|m| format!("{m:?}")).collect();
                let active = link.active_mode.map(|m| format!("{m:?}"));

                // Row one: summary sources and widget targets are invalid.
                let invalid = matches!(s, Kind::View(ChartKind::DataSummary)) || matches!(t, Kind::Widget);
                // Row two: shared dimension or a row-level target allows both.
                let both = shared || matches!(t, Kind::View(ChartKind::Scatter));
                let (want, want_active): (Vec<&str>, Option<&str>) = if invalid {
                    (vec![], None)
                } else if both {
                    (vec!["Highlight", "Filter"], Some("Highlight"))
                } else {
                    (vec!["Filter"], Some("Filter"))
                };
                cells += 1;
                if got != want || active.as_deref() != want_active || link.valid == invalid {
                    mismatches.push(format!("{s:?}->{t:?} shared={shared}: {got:?}/{active:?}"));
                }
            }
        }
    }
    ensure!(mismatches.is_empty(), "{} mismatches: {:?}", mismatches.len(), mismatches);
    let same = classify_pair(&element("x", Kind::Widget, "A"), &element("x", Kind::Widget, "A"));
    ensure!(same.is_err(), "self link accepted");
    Ok(format!("{cells} cells, 0 mismatches"))
}

// ---------------------------------------------------------------------------
// 6: degradation

fn template_degradation() -> Outcome {
    let catalog = Catalog::bundled();
    let config = EngineConfig::default();
    let shape = TableShape {
        quantitative: 2,
        categorical: 2,
        geographic: 0,
        temporal: 1,
        rows: 150,
    };
    let ds = load_csv(random_table_csv(shape, 5).as_bytes(), CsvOptions::default()).unwrap();
    let input = UserInput::new(&[], &[Intent::MeasureAnalysis]);
    let recs = recommend_collections(&ds, catalog, &input, &CanvasState::default(), &config).map_err(|e| e.to_string())?;
    let m1 = recs.collections.iter().find(|c| c.collection.code == "M1").ok_or("M1 not generated")?;
    let kinds: Vec<ChartKind> = m1.collection.views.iter().map(|v| v.kind).collect();
    let bars = kinds.iter().filter(|k| **k == ChartKind::Bar).count();
    ensure!(bars == 2, "M1 has {bars} bar charts: {kinds:?}");
    ensure!(!kinds.contains(&ChartKind::Map), "M1 has a map: {kinds:?}");

    let shape = TableShape {
        quantitative: 3,
        categorical: 3,
        geographic: 1,
        temporal: 0,
        rows: 150,
    };
    let ds = load_csv(random_table_csv(shape, 6).as_bytes(), CsvOptions::default()).unwrap();
    let input = UserInput::new(&[], &[Intent::ChangeAnalysis]);
    let recs = recommend_collections(&ds, catalog, &input, &CanvasState::default(), &config).map_err(|e| e.to_string())?;
    ensure!(
        recs.collections.iter().all(|c| c.collection.code != "CH1"),
        "CH1 generated without a temporal attribute"
    );
    ensure!(recs.diagnostics.iter().any(|d| d.code == "CH1"), "no CH1 diagnostic");
    Ok(format!("M1 views {kinds:?}; CH1 omitted with a diagnostic"))
}

// ---------------------------------------------------------------------------
// 7: consistency

fn quantitative_positional_axes(spec: &Value) -> Vec<&Value> {
    let encodings = std::iter::once(&spec["encoding"])
        .chain(spec["layer"].as_array().into_iter().flatten().map(|l| &l["encoding"]));
    encodings
        .flat_map(|e| ["x", "y"].map(|ch| &e[ch]))
        .filter(|d| d["type"] == "quantitative")
        .collect()
}

fn consistency_suite() -> Outcome {
    let catalog = Catalog::bundled();
    let mut checked = 0;
    for fixture in 0..10u64 {
        let ds = random_fixture(2000 + fixture, 10, 300);
        let recs = recommend_collections(&ds, catalog, &UserInput::default(), &CanvasState::default(), &EngineConfig::default())
            .map_err(|e| e.to_string())?;
        let colors = assign_colors(&ds);
        let mut seen: std::collections::HashMap<String, String> = Default::default();
        for rc in &recs.collections {
            let mut sorts = std::collections::BTreeSet::new();
            for v in &rc.collection.views {
                let spec = emit_chart_spec(v, &ds, &colors).map_err(|e| format!("{v:?}: {e}"))?;
                let meta = &spec["usermeta"]["medley"];
                for (attr, color) in meta["colors"].as_object().unwrap() {
                    let color = color.as_str().unwrap().to_string();
                    let prev = seen.entry(attr.clone()).or_insert_with(|| color.clone());
                    ensure!(*prev == color, "fixture {fixture}: {attr} drawn in {prev} and {color}");
                }
                if v.encodes_change() {
                    ensure!(meta["diverging"] == true, "fixture {fixture} {}: {v:?} not diverging", rc.collection.code);
                    ensure!(spec.to_string().contains("\"scheme\":\"redblue\""), "fixture {fixture}: {v:?} lacks redblue");
                }
                for axis in quantitative_positional_axes(&spec) {
                    ensure!(axis["scale"]["zero"] == true, "fixture {fixture}: {v:?} axis without zero baseline");
                }
                sorts.insert(meta["sort"].as_str().unwrap_or("").to_string());
                checked += 1;
            }
            ensure!(sorts.len() <= 1, "fixture {fixture} {}: sort directions {sorts:?}", rc.collection.code);
        }
    }
    Ok(format!("{checked} views over 10 fixtures"))
}

// ---------------------------------------------------------------------------
// 8: metrics

fn metric_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..200);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let slope = rng.gen_range(-2.0..2.0);
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + rng.gen_range(-80.0..80.0)).collect();
        let got = pearson(&xs, &ys).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle_pearson(&xs, &ys)).abs());
    }
    ensure!(worst <= 1e-12, "pearson differs by {worst:e}");

    let p = MetricParams::default();
    let flat = vec![4.0; 30];
    let ramp: Vec<f64> = (0..30).map(f64::from).collect();
    let mut spike = flat.clone();
    spike[15] = 40.0;
    let peaks = |s: &[f64]| smoothed_z_score_peaks(s, p.lag, p.threshold, p.influence).map_err(|e| e.to_string());
    ensure!(peaks(&flat)? == 0 && peaks(&ramp)? == 0, "flat/ramp peaks {} {}", peaks(&flat)?, peaks(&ramp)?);
    ensure!(peaks(&spike)? == 1, "spike peaks {}", peaks(&spike)?);

    let catalog = Catalog::bundled();
    let mut scores = 0;
    for fixture in 0..10u64 {
        let ds = random_fixture(3000 + fixture, 8, 200);
        let recs = recommend_collections(&ds, catalog, &UserInput::default(), &CanvasState::default(), &EngineConfig::default())
            .map_err(|e| e.to_string())?;
        for rc in &recs.collections {
            ensure!((0.0..=1.0).contains(&rc.mean_interestingness), "mean {}", rc.mean_interestingness);
            for rv in &rc.ranked_views {
                let s = rv.interestingness.normalized;
                ensure!((0.0..=1.0).contains(&s), "{} normalized score {s}", rc.collection.code);
                scores += 1;
            }
        }
    }

    for explicit in [false, true] {
        let values: Vec<f64> = (1..=500).map(|c| penalty_for(c, explicit, p.penalty_cardinality)).collect();
        ensure!(values.windows(2).all(|w| w[1] <= w[0]), "penalty not monotone (explicit={explicit})");
        ensure!(values.iter().all(|v| *v > 0.0 && *v <= 1.0), "penalty outside (0, 1]");
    }
    Ok(format!("pearson max error {worst:.1e}; peaks 0/0/1; {scores} scores in [0,1]; penalty monotone"))
}

// ---------------------------------------------------------------------------
// 9: determinism

fn scenario_canvas() -> CanvasState {
    let views = [
        ViewSpec::new(ChartKind::DataSummary, AggFn::Sum).measure("Sales"),
        ViewSpec::new(ChartKind::Map, AggFn::Sum).measure("Sales").dimension("State"),
    ];
    CanvasState {
        elements: views
            .into_iter()
            .enumerate()
            .map(|(i, v)| CanvasElement {
                id: format!("e{i}"),
                spec: ElementSpec::View(v),
                geometry: Geometry::new(0, 4 * i as u32, 6, 4),
                overrides: Default::default(),
            })
            .collect(),
        link_overrides: Vec::new(),
    }
}

fn run_cli(data: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_medley"))
        .args(["recommend", "--attrs", "Profit", "--charts", "--data"])
        .arg(data)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "recommend exited with {status}");
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let csv = superstore_csv(800, 3);
    let catalog = Catalog::bundled();
    let config = EngineConfig::default();
    let inputs = [
        (UserInput::default(), CanvasState::default()),
        (UserInput::new(&["Profit"], &[Intent::ChangeAnalysis]), scenario_canvas()),
        (UserInput::new(&["Region", "Discount"], &[]), scenario_canvas()),
    ];
    for (input, canvas) in &inputs {
        let mut outputs = Vec::new();
        for _ in 0..5 {
            let ds = load_csv(csv.as_bytes(), CsvOptions::default()).unwrap();
            let recs: Recommendations = recommend_collections(&ds, catalog, input, canvas, &config).map_err(|e| e.to_string())?;
            outputs.push(serde_json::to_vec(&recs).unwrap());
        }
        ensure!(outputs.windows(2).all(|w| w[0] == w[1]), "in-process runs differ for {input:?}");
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("orders.csv");
    std::fs::write(&data, &csv).map_err(|e| e.to_string())?;
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| run_cli(&data, &dir.path().join(format!("run{i}.json"))))
        .collect::<Result<_, _>>()?;
    ensure!(runs[0] == runs[1], "separate processes wrote different output");
    let args = medley_server::cli::RecommendArgs {
        data: data.clone(),
        attrs: vec!["Profit".into()],
        intents: Vec::new(),
        top: None,
        out: None,
        charts: true,
        config: None,
    };
    let here = serde_json::to_string_pretty(&medley_server::cli::recommend(&args).map_err(|e| e.to_string())?).unwrap() + "\n";
    ensure!(here.as_bytes() == runs[0].as_slice(), "process output differs from in-process output");
    Ok(format!("5 runs x {} inputs and 2 processes byte-identical ({} bytes)", inputs.len(), runs[0].len()))
}

// ---------------------------------------------------------------------------
// 10: performance

fn desk_scale_performance() -> Outcome {
    let shape = TableShape {
        quantitative: 8,
        categorical: 8,
        geographic: 2,
        temporal: 2,
        rows: 10_000,
    };
    let csv = random_table_csv(shape, 10);
    let load_start = Instant::now();
    let ds = load_csv(csv.as_bytes(), CsvOptions::default()).unwrap();
    let load = load_start.elapsed();
    ensure!(ds.attributes().len() == 20, "{} attributes", ds.attributes().len());
    ensure!(ds.row_count() == 10_000, "{} rows", ds.row_count());
    let catalog = Catalog::bundled();
    let config = EngineConfig::default();
    let mut worst = Duration::ZERO;
    for input in [UserInput::default(), UserInput::new(&["Q1", "C1"], &[])] {
        let start = Instant::now();
        let recs = recommend_collections(&ds, catalog, &input, &CanvasState::default(), &config).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure!(recs.collections.len() == catalog.templates().len(), "{} collections", recs.collections.len());
        worst = worst.max(elapsed);
    }
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    ensure!(worst < Duration::from_secs(2), "slowest pass {worst:.2?} ({profile})");
    Ok(format!("slowest pass {worst:.2?}, CSV load {load:.2?} ({profile} build)"))
}
