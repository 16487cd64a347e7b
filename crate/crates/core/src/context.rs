//! Context index: one vector per agent, computed from its description
//! expanded with synthetic queries.

use std::cmp::Ordering as CmpOrdering;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{IvfConfig, IvfLayer};
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::model::{dot, AgentCard, Vector, DEFAULT_MAX_SYN};
use crate::remote::{JsonClient, RetryPolicy};
use crate::text::tokenize;

/// Description followed by the synthetic queries generated for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoDoc {
    pub agent_id: String,
    pub text: String,
    pub synthetic_queries: Vec<String>,
}

/// Source of synthetic queries for an agent.
pub trait QueryGenerator: Send + Sync {
    fn generate(&self, agent: &AgentCard, n: usize) -> Result<Vec<String>>;
}

/// Generates nothing; expansion degenerates to the bare description.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullGenerator;

impl QueryGenerator for NullGenerator {
    fn generate(&self, _agent: &AgentCard, _n: usize) -> Result<Vec<String>> {
        Ok(Vec::new())
    }
}

const STOPWORDS: &[&str] = &[
    "about", "across", "after", "agent", "their", "there", "these", "those", "which", "while", "where", "within",
    "without", "would", "could", "should", "other", "every", "using", "based", "through",
];

/// Offline generator that fills fixed phrasing templates from the agent's
/// own tags and description terms. Its phrasing is deliberately disjoint
/// from the benchmark query templates.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateGenerator;

impl TemplateGenerator {
    fn description_terms(agent: &AgentCard) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in tokenize(&agent.description) {
            if t.len() >= 5
                && t.chars().all(char::is_alphabetic)
                && !STOPWORDS.contains(&t.as_str())
                && !out.contains(&t)
            {
                out.push(t);
            }
        }
        out
    }
}

impl QueryGenerator for TemplateGenerator {
    fn generate(&self, agent: &AgentCard, n: usize) -> Result<Vec<String>> {
        let tags = &agent.tags;
        if tags.is_empty() {
            return Ok(Vec::new());
        }
        let mut terms = Self::description_terms(agent);
        if terms.is_empty() {
            terms = tags.clone();
        }
        let tag = |i: usize| tags[i % tags.len()].as_str();
        let term = |i: usize| terms[i % terms.len()].as_str();
        let last = tags.len() - 1;
        let out = (0..n)
            .map(|i| {
                let round = i / 5;
                match i % 5 {
                    0 => format!("which agent can handle {}", tag(last + tags.len() - round % tags.len())),
                    1 => format!("help with {} in {}", tag(1 + round), tag(0)),
                    2 => format!("find a tool for {} and {} in {}", term(2 * round), term(2 * round + 1), tag(0)),
                    3 => format!("looking for {} support around {}", tag(2 + round), term(2 * round + 2)),
                    _ => format!("{} assistant that knows {}", tag(0), tag(3 + round)),
                }
            })
            .collect();
        Ok(out)
    }
}

#[derive(Serialize)]
struct GenRequest<'a> {
    description: &'a str,
    tags: &'a [String],
    n: usize,
}

#[derive(Deserialize)]
struct GenResponse {
    queries: Vec<String>,
}

/// Client for `POST {endpoint}/gen_queries`.
pub struct HttpGenerator {
    client: JsonClient,
}

impl HttpGenerator {
    pub fn new(endpoint: &str) -> Self {
        HttpGenerator { client: JsonClient::new(endpoint, Duration::from_secs(30), 4, RetryPolicy::DEFAULT) }
    }
}

impl QueryGenerator for HttpGenerator {
    fn generate(&self, agent: &AgentCard, n: usize) -> Result<Vec<String>> {
        let req = GenRequest { description: &agent.description, tags: &agent.tags, n };
        Ok(self.client.post::<_, GenResponse>("gen_queries", &req)?.queries)
    }
}

/// Applies a generator to agents, truncating to `max_syn` queries and
/// falling back to no expansion when the generator fails.
pub struct Expander {
    generator: Arc<dyn QueryGenerator>,
    max_syn: usize,
    warnings: AtomicUsize,
}

impl Expander {
    pub fn new(generator: Arc<dyn QueryGenerator>, max_syn: usize) -> Self {
        Expander { generator, max_syn, warnings: AtomicUsize::new(0) }
    }

    pub fn null() -> Self {
        Expander::new(Arc::new(NullGenerator), DEFAULT_MAX_SYN)
    }

    /// Number of agents whose generator call failed.
    pub fn warnings(&self) -> usize {
        self.warnings.load(Ordering::Relaxed)
    }

    pub fn expand(&self, agent: &AgentCard) -> Result<PseudoDoc> {
        if agent.description.trim().is_empty() {
            return Err(Error::input(format!("agent {} has an empty description", agent.id)));
        }
        let mut queries = match self.generator.generate(agent, self.max_syn) {
            Ok(q) => q,
            Err(e) => {
                tracing::warn!(agent = %agent.id, error = %e, "query generation failed, using bare description");
                self.warnings.fetch_add(1, Ordering::Relaxed);
                Vec::new()
            }
        };
        queries.retain(|q| !q.trim().is_empty());
        queries.truncate(self.max_syn);
        let mut text = agent.description.clone();
        for q in &queries {
            text.push(' ');
            text.push_str(q);
        }
        Ok(PseudoDoc { agent_id: agent.id.clone(), text, synthetic_queries: queries })
    }
}

/// Row-major matrix of unit vectors, one per agent, in input order.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    ivf: Option<IvfLayer>,
}

const PARALLEL_SCAN_MIN: usize = 1 << 21;

impl ContextIndex {
    pub fn build(agents: &[AgentCard], docs: &[PseudoDoc], embedder: &dyn Embedder, dim: usize) -> Result<Self> {
        if embedder.dim() != dim {
            return Err(Error::Build(format!("embedder dim {} does not match configured dim {dim}", embedder.dim())));
        }
        if agents.len() != docs.len() {
            return Err(Error::Build(format!("{} agents but {} pseudo-documents", agents.len(), docs.len())));
        }
        if let Some((a, d)) = agents.iter().zip(docs).find(|(a, d)| a.id != d.agent_id) {
            return Err(Error::Build(format!("pseudo-document for {} paired with agent {}", d.agent_id, a.id)));
        }
        let texts: Vec<String> = docs.iter().map(|d| d.text.clone()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        Self::from_vectors(agents.iter().map(|a| a.id.clone()).collect(), &vectors, dim)
    }

    pub fn from_vectors(ids: Vec<String>, vectors: &[Vector], dim: usize) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::Build(format!("{} ids but {} vectors", ids.len(), vectors.len())));
        }
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::Build(format!("vector dim {} does not match {dim}", v.dim())));
            }
            data.extend_from_slice(v.as_slice());
        }
        Ok(ContextIndex { ids, dim, data, ivf: None })
    }

    /// Adds an inverted-file layer; [`search`](Self::search) then probes it
    /// instead of scanning every row.
    pub fn enable_ivf(&mut self, config: IvfConfig) -> Result<()> {
        self.ivf = Some(IvfLayer::build(&self.data, self.dim, config)?);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn score_row(&self, row: usize, query: &[f32]) -> f64 {
        dot(self.row(row), query)
    }

    fn check_query(&self, q: &Vector) -> Result<()> {
        if q.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: q.dim() });
        }
        Ok(())
    }

    /// Orders by score descending, then agent id ascending.
    pub(crate) fn rank_cmp(&self, a: &(u32, f64), b: &(u32, f64)) -> CmpOrdering {
        b.1.total_cmp(&a.1).then_with(|| self.ids[a.0 as usize].cmp(&self.ids[b.0 as usize]))
    }

    pub(crate) fn top_k(&self, mut scored: Vec<(u32, f64)>, k: usize) -> Vec<(u32, f64)> {
        if k < scored.len() {
            scored.select_nth_unstable_by(k, |a, b| self.rank_cmp(a, b));
            scored.truncate(k);
        }
        scored.sort_by(|a, b| self.rank_cmp(a, b));
        scored
    }

    /// Exact top-k rows by dot product.
    pub fn search_exact_rows(&self, q: &Vector, k: usize) -> Result<Vec<(u32, f64)>> {
        self.check_query(q)?;
        let q = q.as_slice();
        let scored: Vec<(u32, f64)> = if self.data.len() >= PARALLEL_SCAN_MIN {
            self.data.par_chunks(self.dim).enumerate().map(|(i, row)| (i as u32, dot(row, q))).collect()
        } else {
            self.data.chunks(self.dim).enumerate().map(|(i, row)| (i as u32, dot(row, q))).collect()
        };
        Ok(self.top_k(scored, k))
    }

    /// Top-k rows, through the inverted-file layer when one is enabled.
    pub fn search_rows(&self, q: &Vector, k: usize) -> Result<Vec<(u32, f64)>> {
        match &self.ivf {
            Some(ivf) => {
                self.check_query(q)?;
                let scored = ivf
                    .candidates(q.as_slice())
                    .into_iter()
                    .map(|r| (r, self.score_row(r as usize, q.as_slice())))
                    .collect();
                Ok(self.top_k(scored, k))
            }
            None => self.search_exact_rows(q, k),
        }
    }

    pub fn search(&self, q: &Vector, k: usize) -> Result<Vec<(String, f64)>> {
        Ok(self.search_rows(q, k)?.into_iter().map(|(r, s)| (self.ids[r as usize].clone(), s)).collect())
    }
}
