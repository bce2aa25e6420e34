//! HTTP facade over the session engine, versioned under `/api/v1`.

pub mod config;
pub mod error;
pub mod routes;
pub mod store;

use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;

pub use config::{ConfigError, ServiceConfig};
pub use error::ApiError;
pub use store::Registry;

pub struct AppState {
    pub config: ServiceConfig,
    pub registry: Registry,
}

impl AppState {
    /// Opens the configured storage directory, or keeps projects in memory.
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let registry = match &config.storage_dir {
            Some(dir) => Registry::open(dir)?,
            None => Registry::in_memory(),
        };
        Ok(AppState { config, registry })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    use routes::*;
    let limit = state.config.max_upload;
    let api = Router::new()
        .route("/health", get(health))
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/{pid}", get(get_project).delete(delete_project))
        .route("/projects/{pid}/sheets/{sheet}/window", get(sheet_window))
        .route("/projects/{pid}/stagings", get(list_stagings).post(run_extractor))
        .route("/projects/{pid}/stagings/{sid}", get(get_staging).delete(discard_staging))
        .route("/projects/{pid}/stagings/{sid}/edits", post(edit_staging))
        .route("/projects/{pid}/stagings/{sid}/commit", post(commit_staging))
        .route("/projects/{pid}/stagings/{sid}/discard", post(discard_staging))
        .route("/projects/{pid}/commits", get(list_commits))
        .route("/projects/{pid}/commits/{cid}", get(get_commit))
        .route("/projects/{pid}/commits/{cid}/undo", post(undo_commit))
        .route("/projects/{pid}/inspect", post(inspect))
        .route("/projects/{pid}/annotations/remove", post(remove_annotations))
        .route("/projects/{pid}/orphans", get(orphans))
        .route("/projects/{pid}/collect", post(collect))
        .route("/projects/{pid}/lift", post(lift))
        .route("/projects/{pid}/instances", get(instances))
        .route("/projects/{pid}/graphs/{graph}", get(export_graph))
        .route("/projects/{pid}/log", get(download_log))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state);
    Router::new().nest("/api/v1", api).fallback(not_found)
}

/// Binds the configured address and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = format!("{}:{}", config.host, config.port);
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!("listening on http://{}/api/v1", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
