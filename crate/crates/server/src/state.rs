//! Dataset and session stores shared by all requests.
//!
//! With a session directory configured, uploads are kept under
//! `datasets/<id>.csv` and every session appends to `sessions/<id>.ndjson`;
//! both are reloaded on start.

use std::collections::HashMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use medley_core::catalog::Catalog;
use medley_core::dataset::{load_csv, CsvOptions, Dataset};
use medley_core::session::Session;

use crate::config::ServerConfig;
use crate::error::ApiError;

pub type SharedSession = Arc<RwLock<Session>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServerConfig,
    catalog: Arc<Catalog>,
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    sessions: RwLock<HashMap<String, SharedSession>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig, catalog: Catalog) -> Self {
        AppState {
            inner: Arc::new(Inner {
                config,
                catalog: Arc::new(catalog),
                datasets: RwLock::new(HashMap::new()),
                sessions: RwLock::new(HashMap::new()),
                next_session: AtomicU64::new(1),
            }),
        }
    }

    /// A store with everything persisted under the session directory loaded
    /// back in.
    pub fn restore(config: ServerConfig, catalog: Catalog) -> anyhow::Result<Self> {
        let state = AppState::new(config, catalog);
        let Some(dir) = state.inner.config.session_dir.clone() else {
            return Ok(state);
        };
        std::fs::create_dir_all(dir.join("datasets"))?;
        std::fs::create_dir_all(dir.join("sessions"))?;
        for path in sorted_entries(&dir.join("datasets"), "csv")? {
            let bytes = std::fs::read(&path)?;
            let ds = load_csv(&bytes, CsvOptions::default())
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            state.write_datasets().insert(ds.id().to_string(), Arc::new(ds));
        }
        let mut max_id = 0;
        for path in sorted_entries(&dir.join("sessions"), "ndjson")? {
            let file = std::fs::File::open(&path)?;
            let dataset_id = first_dataset_id(&path)?;
            let ds = state
                .dataset(&dataset_id)
                .map_err(|_| anyhow::anyhow!("{}: dataset `{dataset_id}` is missing", path.display()))?;
            let session = Session::replay(
                BufReader::new(file),
                ds,
                state.inner.catalog.clone(),
                state.inner.config.engine,
            )
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?
            .reopen_log(&path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            if let Some(n) = session.id().strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            state.write_sessions().insert(session.id().to_string(), Arc::new(RwLock::new(session)));
        }
        state.inner.next_session.store(max_id + 1, Ordering::SeqCst);
        Ok(state)
    }

    pub fn config(&self) -> &ServerConfig {
        &self.inner.config
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.inner.catalog
    }

    fn write_datasets(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, Arc<Dataset>>> {
        self.inner.datasets.write().unwrap_or_else(|p| p.into_inner())
    }

    fn write_sessions(&self) -> std::sync::RwLockWriteGuard<'_, HashMap<String, SharedSession>> {
        self.inner.sessions.write().unwrap_or_else(|p| p.into_inner())
    }

    /// Parses and stores an upload. The same bytes always yield the same id.
    pub fn add_dataset(&self, bytes: &[u8]) -> Result<Arc<Dataset>, ApiError> {
        let cfg = &self.inner.config;
        let ds = load_csv(bytes, CsvOptions::default())?;
        if ds.attributes().len() > cfg.max_attributes {
            return Err(ApiError::too_large(format!(
                "{} attributes exceed the limit of {}",
                ds.attributes().len(),
                cfg.max_attributes
            )));
        }
        if ds.row_count() > cfg.max_rows {
            return Err(ApiError::too_large(format!(
                "{} rows exceed the limit of {}",
                ds.row_count(),
                cfg.max_rows
            )));
        }
        if let Some(existing) = self.inner.datasets.read().unwrap_or_else(|p| p.into_inner()).get(ds.id()) {
            return Ok(existing.clone());
        }
        if let Some(dir) = &cfg.session_dir {
            let path = dir.join("datasets").join(format!("{}.csv", ds.id()));
            std::fs::write(&path, bytes).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
        }
        let ds = Arc::new(ds);
        self.write_datasets().insert(ds.id().to_string(), ds.clone());
        Ok(ds)
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ApiError> {
        self.inner
            .datasets
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_dataset(id))
    }

    pub fn create_session(&self, dataset_id: &str) -> Result<SharedSession, ApiError> {
        let ds = self.dataset(dataset_id)?;
        let n = self.inner.next_session.fetch_add(1, Ordering::SeqCst);
        let id = format!("s{n}");
        let catalog = self.inner.catalog.clone();
        let engine = self.inner.config.engine;
        let session = match &self.inner.config.session_dir {
            Some(dir) => Session::with_log(&id, ds, catalog, engine, &session_log_path(dir, &id))?,
            None => Session::new(&id, ds, catalog, engine),
        };
        let shared = Arc::new(RwLock::new(session));
        self.write_sessions().insert(id, shared.clone());
        Ok(shared)
    }

    pub fn session(&self, id: &str) -> Result<SharedSession, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

pub fn session_log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join("sessions").join(format!("{id}.ndjson"))
}

fn sorted_entries(dir: &Path, ext: &str) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn first_dataset_id(path: &Path) -> anyhow::Result<String> {
    use std::io::BufRead;
    let mut first = String::new();
    BufReader::new(std::fs::File::open(path)?).read_line(&mut first)?;
    let v: serde_json::Value = serde_json::from_str(&first)?;
    v["datasetId"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| anyhow::anyhow!("{}: first record has no datasetId", path.display()))
}
