//! Per-user composition state and its mutation log.
//!
//! Every state change is committed as a fully resolved
//! [`Mutation`] (element ids and geometry already chosen), so replaying a
//! log reproduces the session exactly. Recommendations are computed lazily
//! and cached until the next mutation.
//!
//! Log format: one JSON object per line, `{"seq": n, "op": ..., ...}`, with
//! `seq` starting at 1 and an `open` record first. Records are flushed as
//! they are written.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canvas::{CanvasElement, CanvasState, ElementSpec, Geometry, LinkMode, ViewError, ViewOverrides};
use crate::catalog::Catalog;
use crate::config::EngineConfig;
use crate::dataset::Dataset;
use crate::emitter::{assign_colors, ColorAssignment};
use crate::engine::{recommend_collections, EngineError, RankedCollection, Recommendations, UserInput};
use crate::interactions::{self, InteractionError, InteractionLink};

/// Size given to views added without a geometry.
pub const DEFAULT_VIEW_SIZE: (u32, u32) = (6, 4);
/// Size given to widgets added without a geometry.
pub const DEFAULT_WIDGET_SIZE: (u32, u32) = (3, 2);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("element id `{0}` is already in use")]
    DuplicateId(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error("session log: {0}")]
    Log(String),
}

impl From<EngineError> for SessionError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownAttribute(a) => SessionError::UnknownAttribute(a),
        }
    }
}

impl From<ViewError> for SessionError {
    fn from(e: ViewError) -> Self {
        match e {
            ViewError::UnknownAttribute(a) => SessionError::UnknownAttribute(a),
            other => SessionError::InvalidElement(other.to_string()),
        }
    }
}

/// Partial update of a placed element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ElementPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<ViewOverrides>,
}

/// A resolved state change, as recorded in the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Mutation {
    Open { session_id: String, dataset_id: String },
    UpdateInput { input: UserInput },
    /// Appends elements atomically: all or none.
    AddElements { elements: Vec<CanvasElement> },
    RemoveElement { id: String },
    PatchElement { id: String, patch: ElementPatch },
    SetLinkMode { source: String, target: String, mode: LinkMode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub mutation: Mutation,
}

struct LogWriter {
    out: BufWriter<File>,
}

impl LogWriter {
    fn append(&mut self, record: &LogRecord) -> Result<(), SessionError> {
        let line = serde_json::to_string(record).expect("log records serialize");
        let io = |e: std::io::Error| SessionError::Log(e.to_string());
        writeln!(self.out, "{line}").map_err(io)?;
        self.out.flush().map_err(io)
    }
}

pub struct Session {
    id: String,
    dataset: Arc<Dataset>,
    catalog: Arc<Catalog>,
    config: EngineConfig,
    colors: ColorAssignment,
    input: UserInput,
    canvas: CanvasState,
    cache: Option<Arc<Recommendations>>,
    fresh: bool,
    recomputations: u64,
    added: u64,
    seq: u64,
    log: Option<LogWriter>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("dataset", &self.dataset.id())
            .field("input", &self.input)
            .field("canvas", &self.canvas)
            .field("recomputations", &self.recomputations)
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn new(id: &str, dataset: Arc<Dataset>, catalog: Arc<Catalog>, config: EngineConfig) -> Self {
        let colors = assign_colors(&dataset);
        Session {
            id: id.to_string(),
            dataset,
            catalog,
            config,
            colors,
            input: UserInput::default(),
            canvas: CanvasState::default(),
            cache: None,
            fresh: false,
            recomputations: 0,
            added: 0,
            seq: 1,
            log: None,
        }
    }

    /// A session that appends every mutation to `path`, creating the file.
    pub fn with_log(
        id: &str,
        dataset: Arc<Dataset>,
        catalog: Arc<Catalog>,
        config: EngineConfig,
        path: &Path,
    ) -> Result<Self, SessionError> {
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(path)
            .map_err(|e| SessionError::Log(format!("{}: {e}", path.display())))?;
        let mut s = Session::new(id, dataset, catalog, config);
        s.log = Some(LogWriter { out: BufWriter::new(file) });
        s.write_log(LogRecord { seq: 1, mutation: s.open_record() })?;
        Ok(s)
    }

    /// Continues appending to an existing log, typically the one this
    /// session was replayed from.
    pub fn reopen_log(mut self, path: &Path) -> Result<Self, SessionError> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| SessionError::Log(format!("{}: {e}", path.display())))?;
        self.log = Some(LogWriter { out: BufWriter::new(file) });
        Ok(self)
    }

    /// Rebuilds a session from its log. The dataset must be the one the log
    /// was recorded against.
    pub fn replay(
        log: impl BufRead,
        dataset: Arc<Dataset>,
        catalog: Arc<Catalog>,
        config: EngineConfig,
    ) -> Result<Self, SessionError> {
        let mut session: Option<Session> = None;
        for (n, line) in log.lines().enumerate() {
            let line = line.map_err(|e| SessionError::Log(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LogRecord =
                serde_json::from_str(&line).map_err(|e| SessionError::Log(format!("line {}: {e}", n + 1)))?;
            match (&mut session, record.mutation) {
                (None, Mutation::Open { session_id, dataset_id }) => {
                    if dataset_id != dataset.id() {
                        return Err(SessionError::Log(format!(
                            "log was recorded against dataset `{dataset_id}`, not `{}`",
                            dataset.id()
                        )));
                    }
                    session = Some(Session::new(&session_id, dataset.clone(), catalog.clone(), config));
                }
                (None, _) => return Err(SessionError::Log("log does not start with an open record".into())),
                (Some(_), Mutation::Open { .. }) => {
                    return Err(SessionError::Log(format!("line {}: repeated open record", n + 1)))
                }
                (Some(s), m) => {
                    if record.seq != s.seq + 1 {
                        return Err(SessionError::Log(format!(
                            "line {}: expected seq {}, found {}",
                            n + 1,
                            s.seq + 1,
                            record.seq
                        )));
                    }
                    s.apply(&m)?;
                    s.seq = record.seq;
                }
            }
        }
        session.ok_or_else(|| SessionError::Log("empty log".into()))
    }

    fn open_record(&self) -> Mutation {
        Mutation::Open {
            session_id: self.id.clone(),
            dataset_id: self.dataset.id().to_string(),
        }
    }

    fn write_log(&mut self, record: LogRecord) -> Result<(), SessionError> {
        match &mut self.log {
            Some(w) => w.append(&record),
            None => Ok(()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn colors(&self) -> &ColorAssignment {
        &self.colors
    }

    pub fn input(&self) -> &UserInput {
        &self.input
    }

    pub fn canvas(&self) -> &CanvasState {
        &self.canvas
    }

    /// Number of engine passes run so far.
    pub fn recomputations(&self) -> u64 {
        self.recomputations
    }

    /// Number of mutations applied, including the open record.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn links(&self) -> Vec<InteractionLink> {
        interactions::infer_links(&self.canvas)
    }

    /// The last computed list and whether a mutation has happened since.
    pub fn cached_recommendations(&self) -> Option<(Arc<Recommendations>, bool)> {
        self.cache.as_ref().map(|r| (r.clone(), !self.fresh))
    }

    /// Recommendations for the current input and canvas, recomputed only if
    /// the state changed since the last pass.
    pub fn refresh_recommendations(&mut self) -> Result<Arc<Recommendations>, SessionError> {
        if let (true, Some(r)) = (self.fresh, &self.cache) {
            return Ok(r.clone());
        }
        let r = Arc::new(recommend_collections(
            &self.dataset,
            &self.catalog,
            &self.input,
            &self.canvas,
            &self.config,
        )?);
        self.recomputations += 1;
        self.cache = Some(r.clone());
        self.fresh = true;
        Ok(r)
    }

    /// Validates, applies and logs a resolved mutation.
    pub fn commit(&mut self, mutation: Mutation) -> Result<(), SessionError> {
        if matches!(mutation, Mutation::Open { .. }) {
            return Err(SessionError::Log("sessions are opened once".into()));
        }
        self.apply(&mutation)?;
        self.seq += 1;
        self.write_log(LogRecord { seq: self.seq, mutation })
    }

    /// Applies a mutation without logging it. State is unchanged on error.
    fn apply(&mut self, mutation: &Mutation) -> Result<(), SessionError> {
        match mutation {
            Mutation::Open { .. } => return Err(SessionError::Log("unexpected open record".into())),
            Mutation::UpdateInput { input } => {
                input.validate(&self.dataset)?;
                self.input = input.clone().normalized();
            }
            Mutation::AddElements { elements } => {
                let mut next = self.canvas.clone();
                for e in elements {
                    if next.get(&e.id).is_some() {
                        return Err(SessionError::DuplicateId(e.id.clone()));
                    }
                    if e.id.is_empty() {
                        return Err(SessionError::InvalidElement("element ids must not be empty".into()));
                    }
                    e.spec.validate(&self.dataset)?;
                    check_geometry(&e.geometry)?;
                    next.elements.push(e.clone());
                }
                self.canvas = next;
                self.added += elements.len() as u64;
            }
            Mutation::RemoveElement { id } => {
                let i = self.index_of(id)?;
                self.canvas.elements.remove(i);
                interactions::prune_link_overrides(&mut self.canvas);
            }
            Mutation::PatchElement { id, patch } => {
                let i = self.index_of(id)?;
                if let Some(g) = &patch.geometry {
                    check_geometry(g)?;
                }
                if patch.overrides.is_some_and(|o| !o.is_empty()) && self.canvas.elements[i].spec.is_widget() {
                    return Err(SessionError::InvalidElement(format!("widget `{id}` has no view options")));
                }
                let e = &mut self.canvas.elements[i];
                if let Some(g) = patch.geometry {
                    e.geometry = g;
                }
                if let Some(o) = patch.overrides {
                    e.overrides = o;
                }
            }
            Mutation::SetLinkMode { source, target, mode } => {
                interactions::set_link_mode(&mut self.canvas, source, target, *mode)?;
            }
        }
        self.fresh = false;
        Ok(())
    }

    fn index_of(&self, id: &str) -> Result<usize, SessionError> {
        self.canvas
            .elements
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| SessionError::UnknownElement(id.to_string()))
    }

    pub fn update_input(&mut self, input: UserInput) -> Result<(), SessionError> {
        self.commit(Mutation::UpdateInput { input })
    }

    /// Places one element and returns its id. Missing ids are generated;
    /// missing geometry takes the first free slot on the grid.
    pub fn add_element(
        &mut self,
        spec: ElementSpec,
        geometry: Option<Geometry>,
        id: Option<String>,
    ) -> Result<String, SessionError> {
        let mut ids = self.add_elements(vec![(spec, geometry, id)])?;
        Ok(ids.remove(0))
    }

    /// Places a recommended collection: its views in ranked order, then its
    /// widgets. Elements already on the canvas are skipped. Returns the new
    /// ids.
    pub fn add_collection(&mut self, ranked: &RankedCollection) -> Result<Vec<String>, SessionError> {
        let mut specs: Vec<ElementSpec> = Vec::new();
                for spec in ranked
            .ranked_views
            .iter()
            .map(|r| ElementSpec::View(r.view.clone()))
            .chain(ranked.collection.widgets.iter().cloned().map(ElementSpec::Widget))
        {
            if !self.canvas.elements.iter().any(|e| e.spec == spec) && !specs.contains(&spec) {
                specs.push(spec);
            }
        }
        self.add_elements(specs.into_iter().map(|s| (s, None, None)).collect())
    }

    fn add_elements(
        &mut self,
        items: Vec<(ElementSpec, Option<Geometry>, Option<String>)>,
    ) -> Result<Vec<String>, SessionError> {
        let mut placed: Vec<CanvasElement> = Vec::new();
        let mut counter = self.added;
        for (spec, geometry, id) in items {
            let taken = |id: &str| self.canvas.get(id).is_some() || placed.iter().any(|e| e.id == id);
            let id = match id {
                Some(id) => id,
                None => loop {
                    counter += 1;
                    let candidate = format!("e{counter}");
                    if !taken(&candidate) {
                        break candidate;
                    }
                },
            };
            let geometry = match geometry {
                Some(g) => g,
                None => {
                    let (w, h) = if spec.is_widget() { DEFAULT_WIDGET_SIZE } else { DEFAULT_VIEW_SIZE };
                    let occupied: Vec<Geometry> = self
                        .canvas
                        .elements
                        .iter()
                        .chain(&placed)
                        .map(|e| e.geometry)
                        .collect();
                    free_slot(&occupied, w, h)
                }
            };
            placed.push(CanvasElement {
                id,
                spec,
                geometry,
                overrides: ViewOverrides::default(),
            });
        }
        let ids = placed.iter().map(|e| e.id.clone()).collect();
        self.commit(Mutation::AddElements { elements: placed })?;
        Ok(ids)
    }

    pub fn remove_element(&mut self, id: &str) -> Result<(), SessionError> {
        self.commit(Mutation::RemoveElement { id: id.to_string() })
    }

    pub fn move_resize(&mut self, id: &str, geometry: Geometry) -> Result<(), SessionError> {
        self.patch_element(
            id,
            ElementPatch {
                geometry: Some(geometry),
                overrides: None,
            },
        )
    }

    pub fn patch_element(&mut self, id: &str, patch: ElementPatch) -> Result<(), SessionError> {
        self.commit(Mutation::PatchElement { id: id.to_string(), patch })
    }

    pub fn set_link_mode(&mut self, source: &str, target: &str, mode: LinkMode) -> Result<InteractionLink, SessionError> {
        self.commit(Mutation::SetLinkMode {
            source: source.to_string(),
            target: target.to_string(),
            mode,
        })?;
        Ok(self
            .links()
            .into_iter()
            .find(|l| l.source_id == source && l.target_id == target)
            .expect("a link exists for every ordered pair"))
    }
}

fn check_geometry(g: &Geometry) -> Result<(), SessionError> {
    if g.w == 0 || g.h == 0 {
        return Err(SessionError::InvalidGeometry("width and height must be positive".into()));
    }
    if g.x + g.w > Geometry::GRID_COLUMNS {
        return Err(SessionError::InvalidGeometry(format!(
            "columns {}..{} exceed the {}-column grid",
            g.x,
            g.x + g.w,
            Geometry::GRID_COLUMNS
        )));
    }
    Ok(())
}

fn overlaps(a: &Geometry, b: &Geometry) -> bool {
    a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h
}

/// First position, scanning rows top to bottom and columns left to right,
/// where a `w`×`h` box overlaps nothing.
pub fn free_slot(occupied: &[Geometry], w: u32, h: u32) -> Geometry {
    let w = w.min(Geometry::GRID_COLUMNS);
    let bottom = occupied.iter().map(|g| g.y + g.h).max().unwrap_or(0);
    for y in 0..=bottom {
        for x in 0..=Geometry::GRID_COLUMNS - w {
            let g = Geometry::new(x, y, w, h);
            if !occupied.iter().any(|o| overlaps(o, &g)) {
                return g;
            }
        }
    }
    unreachable!("the row below every element is free")
}

#[cfg(test)]
mod tests;
