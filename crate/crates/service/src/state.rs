use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use discovery_core::{AgentCard, Engine, EngineConfig};
use serde::Serialize;

use crate::config::{ApiConfig, Providers};

/// An immutable, fully built index generation.
pub struct Snapshot {
    pub engine: Engine,
    pub build_ms: f64,
}

impl Snapshot {
    pub fn id(&self) -> u64 {
        self.engine.snapshot_id()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Rejection {
    pub index: usize,
    pub reason: String,
    /// HTTP status that would apply to this card on its own.
    pub status: u16,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StageOutcome {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BuildSummary {
    pub agents: usize,
    pub tags: usize,
    pub build_ms: f64,
    pub snapshot_id: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("no agents are staged")]
    NothingStaged,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index build failed: {0}")]
    Failed(String),
}

#[derive(Default)]
struct Staging {
    agents: Vec<AgentCard>,
    ids: HashSet<String>,
}

impl Staging {
    /// First `agent-N` not yet staged, counting from the staged total.
    fn fresh_id(&self) -> String {
        (self.agents.len() + 1..)
            .map(|n| format!("agent-{n}"))
            .find(|id| !self.ids.contains(id))
            .expect("unbounded range")
    }
}

/// Shared service state: the staging area for incoming cards and the
/// active snapshot, which is replaced wholesale on every build.
pub struct AppState {
    config: ApiConfig,
    providers: Providers,
    staging: Mutex<Staging>,
    active: RwLock<Option<Arc<Snapshot>>>,
    build_lock: tokio::sync::Mutex<()>,
    next_snapshot: AtomicU64,
    started: Instant,
    pub(crate) permits: tokio::sync::Semaphore,
}

impl AppState {
    pub fn new(config: ApiConfig, providers: Providers) -> Arc<Self> {
        Arc::new(AppState {
            permits: tokio::sync::Semaphore::new(config.max_concurrent),
            config,
            providers,
            staging: Mutex::default(),
            active: RwLock::new(None),
            build_lock: tokio::sync::Mutex::new(()),
            next_snapshot: AtomicU64::new(1),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    pub fn uptime_secs(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.active.read().expect("snapshot lock poisoned").clone()
    }

    pub fn staged_count(&self) -> usize {
        self.staging.lock().expect("staging lock poisoned").agents.len()
    }

    /// Validates and stages cards; invalid or duplicate cards are reported
    /// by position and skipped. Cards without an id are assigned one.
    pub fn stage(&self, cards: Vec<Result<AgentCard, String>>) -> StageOutcome {
        let mut staging = self.staging.lock().expect("staging lock poisoned");
        let mut outcome = StageOutcome { accepted: 0, rejected: Vec::new() };
        for (index, card) in cards.into_iter().enumerate() {
            let card = card.map(|mut c| {
                if c.id.trim().is_empty() {
                    c.id = staging.fresh_id();
                }
                c
            });
            let card = match card.and_then(|c| c.canonicalized().map_err(|e| e.to_string())) {
                Ok(card) => card,
                Err(reason) => {
                    outcome.rejected.push(Rejection { index, reason, status: 400 });
                    continue;
                }
            };
            if !staging.ids.insert(card.id.clone()) {
                outcome.rejected.push(Rejection { index, reason: "duplicate id".into(), status: 409 });
                continue;
            }
            staging.agents.push(card);
            outcome.accepted += 1;
        }
        outcome
    }

    /// Builds a new snapshot from everything staged and swaps it in. Builds
    /// are serialized; readers keep using the previous snapshot meanwhile.
    pub async fn build(self: &Arc<Self>, config: EngineConfig) -> Result<BuildSummary, BuildError> {
        config.validate().map_err(|e| BuildError::Config(e.to_string()))?;
        let _guard = self.build_lock.lock().await;
        let agents = self.staging.lock().expect("staging lock poisoned").agents.clone();
        if agents.is_empty() {
            return Err(BuildError::NothingStaged);
        }
        let id = self.next_snapshot.fetch_add(1, Ordering::SeqCst);
        let state = self.clone();
        let snapshot = tokio::task::spawn_blocking(move || {
            let started = Instant::now();
            let engine =
                state.providers.build_engine(&config, agents, id).map_err(|e| BuildError::Failed(e.to_string()))?;
            Ok::<_, BuildError>(Snapshot { engine, build_ms: started.elapsed().as_secs_f64() * 1e3 })
        })
        .await
        .map_err(|e| BuildError::Failed(e.to_string()))??;

        let summary = BuildSummary {
            agents: snapshot.engine.index().agents().len(),
            tags: snapshot.engine.index().sparse().vocabulary_size(),
            build_ms: snapshot.build_ms,
            snapshot_id: id,
        };
        *self.active.write().expect("snapshot lock poisoned") = Some(Arc::new(snapshot));
        tracing::info!(
            snapshot = id,
            agents = summary.agents,
            build_ms = summary.build_ms,
            "index snapshot swapped in"
        );
        Ok(summary)
    }
}
