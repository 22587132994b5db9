//! JSON-over-HTTP service for corpora, models, comparisons and projects.
//!
//! All routes live under `/api/v1`. Long-running model fits and grid
//! comparisons run as background jobs that clients poll. Durable state is
//! kept in a [`Store`] directory, so a restart loses no finished results.

mod error;
mod jobs;
mod routes;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

pub use error::{ApiError, ErrorBody};
pub use jobs::{JobKind, JobRecord, JobStatus};
pub use routes::{CodeView, CorpusSummary, DocumentWeight, ModelSummary, MutationResponse, ProjectSummary, TopicView};
pub use store::{Store, StoreError};

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_WORKERS: usize = 2;
/// Documents shown per topic when the caller does not ask for a number.
pub const DEFAULT_EVIDENCE_DOCS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    /// Jobs allowed to run at once.
    pub workers: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: DEFAULT_BIND.parse().expect("valid default address"),
            data_dir: PathBuf::from("groundwork-data"),
            workers: DEFAULT_WORKERS,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    workers: Arc<Semaphore>,
}

impl AppState {
    pub fn new(store: Store, workers: usize) -> Self {
        AppState {
            store: Arc::new(store),
            workers: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn open(config: &ServerConfig) -> Result<Self, StoreError> {
        Ok(Self::new(Store::open(&config.data_dir)?, config.workers))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .nest("/api/v1", routes::api())
        .with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(#[source] std::io::Error),
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    let state = AppState::open(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.bind,
            source,
        })?;
    log::info!(
        "serving /api/v1 on {} with data in {}",
        config.bind,
        config.data_dir.display()
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Serve)
}
