//! HTTP API, on-disk workspace and CLI over `agentree-core`.

pub mod analysis;
pub mod api;
pub mod cache;
pub mod cli;
pub mod clients;
pub mod jobs;
pub mod workspace;

pub use api::{router, AppState};
pub use workspace::Workspace;

/// Serves the API for `workspace` on `bind` until interrupted.
pub async fn serve(workspace: Workspace, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    let app = router(AppState::new(workspace));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
