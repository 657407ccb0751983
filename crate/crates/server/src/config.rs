use std::path::{Path, PathBuf};

use medley_core::catalog::Catalog;
use medley_core::config::EngineConfig;
use serde::{Deserialize, Serialize};

/// Upload cap for `POST /datasets`.
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;
pub const DEFAULT_MAX_ATTRIBUTES: usize = 100;
pub const DEFAULT_MAX_ROWS: usize = 1_000_000;

/// Service configuration, read from a TOML file. Every key is optional.
///
/// ```toml
/// host = "127.0.0.1"
/// port = 8080
/// catalog = "catalog.json"   # defaults to the bundled catalog
/// sessionDir = "sessions"    # mutation logs; none are written when unset
///
/// [engine]
/// enumerationCap = 256
/// attrMatch = "proportion"
///
/// [engine.metrics]
/// lag = 5
/// threshold = 3.0
/// influence = 0.5
/// penaltyCardinality = 12
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub catalog: Option<PathBuf>,
    pub session_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
    pub max_attributes: usize,
    pub max_rows: usize,
    pub engine: EngineConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            catalog: None,
            session_dir: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            max_attributes: DEFAULT_MAX_ATTRIBUTES,
            max_rows: DEFAULT_MAX_ROWS,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("catalog {path}: {message}")]
    Catalog { path: PathBuf, message: String },
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads the file; relative `catalog` and `sessionDir` paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.catalog, &mut cfg.session_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_catalog(&self) -> Result<Catalog, ConfigError> {
        match &self.catalog {
            None => Ok(Catalog::bundled().clone()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                Catalog::from_json(&text).map_err(|e| ConfigError::Catalog {
                    path: path.clone(),
                    message: e.to_string(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use medley_core::config::AttrMatchMode;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ServerConfig::from_toml("").unwrap(), ServerConfig::default());
    }

    #[test]
    fn engine_parameters_are_read() {
        let cfg = ServerConfig::from_toml(
            "port = 9000\n[engine]\nattrMatch = \"jaccard\"\n[engine.metrics]\nlag = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.engine.attr_match, AttrMatchMode::Jaccard);
        assert_eq!(cfg.engine.metrics.lag, 3);
        assert_eq!(cfg.engine.metrics.threshold, 3.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ServerConfig::from_toml("prot = 1").is_err());
        assert!(ServerConfig::from_toml("[engine]\nlagg = 1").is_err());
    }

    #[test]
    fn relative_paths_resolve_against_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("medley.toml");
        std::fs::write(&path, "catalog = \"cat.json\"\nsessionDir = \"/abs/logs\"\n").unwrap();
        let cfg = ServerConfig::load(&path).unwrap();
        assert_eq!(cfg.catalog.as_deref(), Some(dir.path().join("cat.json").as_path()));
        assert_eq!(cfg.session_dir.as_deref(), Some(Path::new("/abs/logs")));
        assert!(matches!(cfg.load_catalog(), Err(ConfigError::Io { .. })));
        std::fs::write(dir.path().join("cat.json"), Catalog::bundled_json()).unwrap();
        assert_eq!(cfg.load_catalog().unwrap().templates().len(), 10);
    }
}
