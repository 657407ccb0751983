//! HTTP service and batch front end for the dashboard recommender.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod state;

pub use api::router;
pub use config::ServerConfig;
pub use error::ApiError;
pub use state::AppState;

/// The OpenAPI description of [`router`].
pub const OPENAPI_JSON: &str = include_str!("../openapi.json");
