//! HTTP service and command-line front end for feedforge.

pub mod client;
pub mod config;
pub mod http;
pub mod service;

pub use config::ServiceConfig;
pub use service::{CacheStatus, FeedService, ServiceError};

use std::sync::Arc;
use std::time::Duration;

/// How often rates are reloaded and expired feeds purged while serving.
pub const MAINTENANCE_INTERVAL: Duration = Duration::from_secs(60 * 60);

/// Loads rates, starts maintenance tasks, and serves until `shutdown`
/// resolves.
pub async fn serve(
    svc: Arc<FeedService>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let _ = svc.refresh_rates().await;
    let maintenance = {
        let svc = svc.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(MAINTENANCE_INTERVAL);
            tick.tick().await;
            loop {
                tick.tick().await;
                let _ = svc.refresh_rates().await;
                let purged = svc.purge();
                if purged > 0 {
                    tracing::info!(purged, "purged expired feeds");
                }
            }
        })
    };
    let result = axum::serve(listener, http::router(svc))
        .with_graceful_shutdown(shutdown)
        .await;
    maintenance.abort();
    result
}
