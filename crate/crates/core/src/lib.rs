//! In-memory agent discovery over three indices built from agent cards:
//! tag postings for sparse recall, expanded context vectors for dense
//! recall, and per-agent example matrices for MaxSim re-ranking.
//!
//! ```
//! use discovery_core::{AgentCard, Engine, EngineConfig};
//!
//! let agents = vec![
//!     AgentCard::new("payroll-bot", "Payroll Bot", "Runs payroll for small teams", ["payroll", "hr"],
//!         ["run payroll for the march cycle"]).unwrap(),
//!     AgentCard::new("ship-bot", "Ship Bot", "Books freight and tracks parcels", ["logistics"],
//!         ["track parcel 1234 to berlin"]).unwrap(),
//! ];
//! let engine = Engine::builder(EngineConfig::default()).build(agents).unwrap();
//! let result = engine.discover("run payroll for the march cycle").unwrap();
//! assert_eq!(result.ranked[0].agent_id, "payroll-bot");
//! ```

pub mod ann;
pub mod benchgen;
pub mod context;
pub mod embed;
pub mod engine;
pub mod error;
pub mod eval;
pub mod intent;
pub mod model;
mod remote;
pub mod sparse;
pub mod tagger;
pub mod text;

pub use ann::IvfConfig;
pub use embed::{Embedder, EmbedderSpec, HashEmbedder, HttpEmbedder};
pub use engine::{DiscoveryResult, Engine, EngineBuilder, StageTimings, TriIndex};
pub use error::{Error, Result};
pub use model::{AgentCard, EngineConfig, Intent, Mode, Origin, QueryRecord, ScoredAgent, Vector};
pub use sparse::{SparseIndex, SynonymDict};
pub use tagger::{LexicalTagger, OracleTagger, TagPredictor};
