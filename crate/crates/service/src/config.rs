use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use discovery_core::context::HttpGenerator;
use discovery_core::embed::EmbedderSpec;
use discovery_core::tagger::{HttpTagger, SLM_URL_ENV};
use discovery_core::{AgentCard, Engine, EngineConfig};

use crate::ServiceError;

pub const BIND_ENV: &str = "GRAIL_BIND";
pub const DEFAULT_BIND: &str = "0.0.0.0:8080";
pub const DEFAULT_BODY_LIMIT: usize = 1 << 20;
pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(2);
/// Discovery requests must be allowed at least this long.
pub const MIN_DEADLINE: Duration = Duration::from_millis(400);

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub body_limit: usize,
    pub deadline: Duration,
    /// Upper bound on discovery requests executing at once.
    pub max_concurrent: usize,
    pub engine: EngineConfig,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            bind: DEFAULT_BIND.parse().expect("valid default address"),
            body_limit: DEFAULT_BODY_LIMIT,
            deadline: DEFAULT_DEADLINE,
            max_concurrent: 64,
            engine: EngineConfig::default(),
        }
    }
}

impl ApiConfig {
    /// Defaults, with the bind address taken from `GRAIL_BIND` when set.
    pub fn from_env() -> Result<Self, ServiceError> {
        let mut config = ApiConfig::default();
        if let Ok(bind) = std::env::var(BIND_ENV) {
            config.bind = parse_bind(&bind)?;
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.deadline < MIN_DEADLINE {
            return Err(ServiceError::Config(format!(
                "deadline {:?} is below the minimum of {:?}",
                self.deadline, MIN_DEADLINE
            )));
        }
        if self.body_limit == 0 || self.max_concurrent == 0 {
            return Err(ServiceError::Config("body limit and concurrency must be positive".into()));
        }
        self.engine.validate().map_err(|e| ServiceError::Config(e.to_string()))
    }
}

/// Accepts `host:port`, or a bare port which binds all interfaces.
pub fn parse_bind(s: &str) -> Result<SocketAddr, ServiceError> {
    let s = s.trim();
    let full = if s.contains(':') { s.to_string() } else { format!("0.0.0.0:{s}") };
    full.parse().map_err(|_| ServiceError::Config(format!("invalid bind address {s:?}")))
}

/// Where embeddings, tag predictions and synthetic queries come from.
#[derive(Debug, Clone, Default)]
pub struct Providers {
    pub embedder: EmbedderSpec,
    pub slm_url: Option<String>,
    pub generator_url: Option<String>,
}

impl Providers {
    /// External services named by `GRAIL_EMBED_URL` and `GRAIL_SLM_URL`,
    /// built-in deterministic components otherwise.
    pub fn from_env(dim: usize) -> Self {
        Providers {
            embedder: EmbedderSpec::from_env(0, dim),
            slm_url: std::env::var(SLM_URL_ENV).ok().filter(|u| !u.trim().is_empty()),
            generator_url: None,
        }
    }

    pub fn build_engine(
        &self,
        config: &EngineConfig,
        agents: Vec<AgentCard>,
        snapshot_id: u64,
    ) -> discovery_core::Result<Engine> {
        let mut spec = self.embedder.clone();
        spec.dim = config.dim;
        let mut builder = Engine::builder(config.clone()).embedder(spec.build()?).snapshot_id(snapshot_id);
        if let Some(url) = &self.generator_url {
            builder = builder.generator(Arc::new(HttpGenerator::new(url)));
        }
        let engine = builder.build(agents)?;
        Ok(match &self.slm_url {
            Some(url) => {
                let sparse = engine.index().sparse();
                let tagger = HttpTagger::new(
                    url,
                    sparse.vocabulary(),
                    sparse.synonyms().clone(),
                    HttpTagger::DEFAULT_DEADLINE,
                    HttpTagger::DEFAULT_IN_FLIGHT,
                );
                engine.with_predictor(Arc::new(tagger))
            }
            None => engine,
        })
    }
}
