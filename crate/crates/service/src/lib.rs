//! HTTP front end for interactive incident localization.
//!
//! The service loads one trace store at startup and answers read-only
//! queries over it. `POST /simulate` is the only writer: it stores injected
//! incidents as separate corpora under a scratch directory.

pub mod error;
pub mod routes;
pub mod state;

use axum::routing::{get, post};
use axum::Router;

pub use error::{ApiError, ErrorEnvelope};
pub use routes::{LocalizeRequest, LocalizeResponse, StatsResponse, TraceResponse};
pub use state::{AppState, CorpusInfo, SimulationRecord, MAIN_CORPUS};

/// Every route the service answers, as `(method, path)`.
pub const ROUTES: &[(&str, &str)] = &[
    ("get", "/health"),
    ("get", "/corpora"),
    ("get", "/stats"),
    ("post", "/localize"),
    ("get", "/traces/{id}"),
    ("post", "/simulate"),
    ("get", "/spec"),
];

/// Seed for the incident-side sample, so the two sides of one request never
/// share a random stream.
pub fn incident_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(routes::health))
        .route("/corpora", get(routes::corpora))
        .route("/stats", get(routes::stats))
        .route("/localize", post(routes::post_localize))
        .route("/traces/{id}", get(routes::trace))
        .route("/simulate", post(routes::post_simulate))
        .route("/spec", get(routes::openapi))
        .fallback(routes::not_found)
        .with_state(state)
}

/// Serves `router(state)` on `addr` until ctrl-c.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
