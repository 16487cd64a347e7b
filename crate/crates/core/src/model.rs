//! Shared domain types: agent cards, unit vectors, engine configuration and
//! scored results.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 384;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_DENSE_TOP_K: usize = 50;
pub const DEFAULT_FINAL_K: usize = 10;
pub const DEFAULT_MAX_TAGS: usize = 5;
pub const DEFAULT_MAX_SYN: usize = 5;

/// Lowercases and trims a tag.
pub fn canonical_tag(tag: &str) -> String {
    tag.trim().to_lowercase()
}

/// Metadata manifest of a single agent.
///
/// Serialized with the capitalized keys used by agent-card manifests
/// (`Id`, `Name`, `Description`, `Tags`, `Examples`). `Id` may be absent on
/// input, in which case the ingesting component assigns one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentCard {
    #[serde(rename = "Id", default, skip_serializing_if = "String::is_empty")]
    pub id: String,
    #[serde(rename = "Name", default)]
    pub name: String,
    #[serde(rename = "Description")]
    pub description: String,
    #[serde(rename = "Tags")]
    pub tags: Vec<String>,
    #[serde(rename = "Examples", default)]
    pub examples: Vec<String>,
}

impl AgentCard {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        description: impl Into<String>,
        tags: impl IntoIterator<Item = impl Into<String>>,
        examples: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self> {
        AgentCard {
            id: id.into(),
            name: name.into(),
            description: description.into(),
            tags: tags.into_iter().map(Into::into).collect(),
            examples: examples.into_iter().map(Into::into).collect(),
        }
        .canonicalized()
    }

    /// Checks the card invariants and canonicalizes its tags.
    ///
    /// Tags are lowercased and trimmed; duplicates that appear after
    /// canonicalization are dropped, keeping the first occurrence.
    pub fn canonicalized(mut self) -> Result<Self> {
        self.id = self.id.trim().to_string();
        if self.id.is_empty() {
            return Err(Error::InvalidCard("id is empty".into()));
        }
        if self.description.trim().is_empty() {
            return Err(Error::InvalidCard(format!("{}: description is empty", self.id)));
        }
        let mut tags: Vec<String> = Vec::with_capacity(self.tags.len());
        for tag in &self.tags {
            let tag = canonical_tag(tag);
            if tag.is_empty() {
                return Err(Error::InvalidCard(format!("{}: empty tag", self.id)));
            }
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }
        if tags.is_empty() {
            return Err(Error::InvalidCard(format!("{}: at least one tag is required", self.id)));
        }
        self.tags = tags;
        if let Some(j) = self.examples.iter().position(|e| e.trim().is_empty()) {
            return Err(Error::InvalidCard(format!("{}: example {j} is empty", self.id)));
        }
        Ok(self)
    }
}

/// A unit-normalized dense embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f32>);

impl Vector {
    /// Normalizes `raw` to unit length. `raw` must have exactly `dim`
    /// components and a nonzero norm.
    pub fn normalize(raw: &[f32], dim: usize) -> Result<Self> {
        if raw.len() != dim {
            return Err(Error::Dimension { expected: dim, actual: raw.len() });
        }
        let norm = raw.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateVector);
        }
        Ok(Vector(raw.iter().map(|&x| (f64::from(x) / norm) as f32).collect()))
    }

    /// Wraps components that are already known to be unit-norm.
    pub(crate) fn from_unit(components: Vec<f32>) -> Self {
        Vector(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl AsRef<[f32]> for Vector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Dot product of two equal-length f32 slices, accumulated in f64 in index
/// order.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += f64::from(*x) * f64::from(*y);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Hybrid recall, expanded context vectors and MaxSim re-ranking.
    #[default]
    Full,
    /// Resonance replaced by the cosine against the mean example vector.
    NoMaxsim,
    /// Dense recall only; the tag predictor is never called.
    NoSlm,
    /// Description-only context vectors, ranked by context score alone.
    Mdr,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Full, Mode::NoMaxsim, Mode::NoSlm, Mode::Mdr];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::NoMaxsim => "no_maxsim",
            Mode::NoSlm => "no_slm",
            Mode::Mdr => "mdr",
        }
    }

    pub fn uses_sparse(self) -> bool {
        matches!(self, Mode::Full | Mode::NoMaxsim)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(Mode::Full),
            "no_maxsim" => Ok(Mode::NoMaxsim),
            "no_slm" => Ok(Mode::NoSlm),
            "mdr" => Ok(Mode::Mdr),
            other => Err(Error::config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Fusion weight of the context score.
    pub alpha: f64,
    pub dense_top_k: usize,
    pub final_k: usize,
    pub dim: usize,
    pub mode: Mode,
    /// Maximum number of tags requested from the predictor.
    pub max_tags: usize,
    /// Maximum number of synthetic queries appended to a description.
    pub max_syn: usize,
    /// Truncates the sparse candidate list (latency experiments only).
    pub sparse_cap: Option<usize>,
    /// Truncates the union before re-ranking (stress tests only).
    pub rerank_cap: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha: DEFAULT_ALPHA,
            dense_top_k: DEFAULT_DENSE_TOP_K,
            final_k: DEFAULT_FINAL_K,
            dim: DEFAULT_DIM,
            mode: Mode::Full,
            max_tags: DEFAULT_MAX_TAGS,
            max_syn: DEFAULT_MAX_SYN,
            sparse_cap: None,
            rerank_cap: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.dense_top_k == 0 {
            return Err(Error::config("dense_top_k must be positive"));
        }
        if self.final_k == 0 {
            return Err(Error::config("final_k must be positive"));
        }
        if self.dim == 0 {
            return Err(Error::config("dim must be positive"));
        }
        if self.max_tags == 0 {
            return Err(Error::config("max_tags must be positive"));
        }
        if self.sparse_cap == Some(0) || self.rerank_cap == Some(0) {
            return Err(Error::config("caps must be positive when set"));
        }
        Ok(())
    }

    /// The fusion weight actually applied for this configuration's mode.
    /// `mdr` ranks by the context score alone.
    pub fn effective_alpha(&self) -> f64 {
        match self.mode {
            Mode::Mdr => 1.0,
            _ => self.alpha,
        }
    }
}

/// Weighted fusion of context and resonance scores.
pub fn fuse_scores(alpha: f64, ctx: f64, res: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must be in [0, 1], got {alpha}")));
    }
    Ok(fuse_unchecked(alpha, ctx, res))
}

#[inline]
pub(crate) fn fuse_unchecked(alpha: f64, ctx: f64, res: f64) -> f64 {
    alpha * ctx + (1.0 - alpha) * res
}

/// Which recall path(s) surfaced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Origin {
    pub sparse: bool,
    pub dense: bool,
}

impl Serialize for Origin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = Vec::with_capacity(2);
        if self.sparse {
            v.push("sparse");
        }
        if self.dense {
            v.push("dense");
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Origin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        Ok(Origin { sparse: v.iter().any(|s| s == "sparse"), dense: v.iter().any(|s| s == "dense") })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAgent {
    pub agent_id: String,
    pub context_score: f64,
    pub resonance_score: f64,
    pub final_score: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Capability,
    Scenario,
    Keyword,
}

impl Intent {
    pub const ALL: [Intent; 3] = [Intent::Capability, Intent::Scenario, Intent::Keyword];
}

/// A labeled benchmark query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    #[serde(rename = "query")]
    pub text: String,
    #[serde(rename = "agent_id")]
    pub truth_agent_id: String,
    pub intent: Intent,
}
