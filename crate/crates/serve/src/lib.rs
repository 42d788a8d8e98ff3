//! HTTP front end for question answering, raw MSQL queries,
//! recommendations, labels and graph statistics.
//!
//! The service answers from one immutable [`Snapshot`] at a time. Each
//! request clones the current `Arc` once and works from it to completion;
//! [`Service::reload`] validates a replacement and swaps the pointer, so
//! no response can mix two snapshots.

mod api;
mod snapshot;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use mskg_core::config::ServeConfig;
use thiserror::Error;

pub use api::router;
pub use snapshot::{Snapshot, SnapshotMeta};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("snapshot validation failed: {0}")]
    ValidationFailed(String),
    #[error("snapshot load failed: {0}")]
    Load(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A live snapshot together with its generation number.
pub struct Live {
    pub generation: u64,
    pub snapshot: Snapshot,
}

#[derive(Default)]
pub struct Service {
    current: RwLock<Option<Arc<Live>>>,
    generations: AtomicU64,
}

impl Service {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_snapshot(snapshot: Snapshot) -> Result<Self, ServeError> {
        let svc = Service::new();
        svc.reload(snapshot)?;
        Ok(svc)
    }

    pub fn current(&self) -> Option<Arc<Live>> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Validates and installs a new snapshot, returning its generation. On
    /// failure the previous snapshot stays live.
    pub fn reload(&self, snapshot: Snapshot) -> Result<u64, ServeError> {
        snapshot.validate()?;
        let generation = self.generations.fetch_add(1, Ordering::SeqCst) + 1;
        let live = Arc::new(Live { generation, snapshot });
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(live);
        Ok(generation)
    }
}

/// Loads the configured snapshot, binds, and serves until interrupted.
/// On unix a SIGHUP reloads the snapshot from the same paths.
pub async fn run(cfg: ServeConfig) -> Result<(), ServeError> {
    let snapshot = tokio::task::spawn_blocking({
        let cfg = cfg.clone();
        move || Snapshot::load(&cfg)
    })
    .await
    .map_err(|e| ServeError::Load(e.to_string()))??;
    let svc = Arc::new(Service::with_snapshot(snapshot)?);
    let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    #[cfg(unix)]
    spawn_reload_on_hangup(svc.clone(), cfg);
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(unix)]
fn spawn_reload_on_hangup(svc: Arc<Service>, cfg: ServeConfig) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
        while hup.recv().await.is_some() {
            let cfg = cfg.clone();
            let loaded = tokio::task::spawn_blocking(move || Snapshot::load(&cfg)).await;
            match loaded {
                Ok(Ok(s)) => match svc.reload(s) {
                    Ok(g) => eprintln!("reloaded snapshot, generation {g}"),
                    Err(e) => eprintln!("reload rejected: {e}"),
                },
                Ok(Err(e)) => eprintln!("reload rejected: {e}"),
                Err(e) => eprintln!("reload task failed: {e}"),
            }
        }
    });
}
