//! The online discovery pipeline.
//!
//! A query is tag-predicted and embedded concurrently; the sparse (tag
//! postings) and dense (context top-k) recall paths then run concurrently,
//! their union is re-ranked by example-level resonance, and the fused
//! scores are sorted into the final top-k.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::IvfConfig;
use crate::context::{ContextIndex, Expander, NullGenerator, QueryGenerator, TemplateGenerator};
use crate::embed::{Embedder, HashEmbedder};
use crate::error::{Error, Result};
use crate::intent::IntentIndex;
use crate::model::{fuse_unchecked, AgentCard, EngineConfig, Mode, Origin, ScoredAgent, Vector};
use crate::sparse::{SparseIndex, SynonymDict};
use crate::tagger::{LexicalTagger, TagPredictor};

/// The three frozen indices plus the agent table they share.
#[derive(Debug)]
pub struct TriIndex {
    agents: Vec<AgentCard>,
    row_of: HashMap<String, u32>,
    sparse: SparseIndex,
    context: ContextIndex,
    description_context: Option<ContextIndex>,
    intent: IntentIndex,
    expansion_warnings: usize,
}

impl TriIndex {
    pub fn agents(&self) -> &[AgentCard] {
        &self.agents
    }

    pub fn agent(&self, row: usize) -> &AgentCard {
        &self.agents[row]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.row_of.get(id).map(|&r| r as usize)
    }

    pub fn sparse(&self) -> &SparseIndex {
        &self.sparse
    }

    /// Context index over expanded pseudo-documents.
    pub fn context(&self) -> &ContextIndex {
        &self.context
    }

    /// Context index over bare descriptions, when built.
    pub fn description_context(&self) -> Option<&ContextIndex> {
        self.description_context.as_ref()
    }

    pub fn intent(&self) -> &IntentIndex {
        &self.intent
    }

    pub fn expansion_warnings(&self) -> usize {
        self.expansion_warnings
    }

    pub fn context_for(&self, mode: Mode) -> Result<&ContextIndex> {
        match mode {
            Mode::Mdr => self
                .description_context
                .as_ref()
                .ok_or_else(|| Error::NotReady("description-only context index was not built".into())),
            _ => Ok(&self.context),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub predict: f64,
    pub embed: f64,
    pub recall_sparse: f64,
    pub recall_dense: f64,
    pub rerank: f64,
    pub total: f64,
}

impl StageTimings {
    pub const STAGES: [&'static str; 6] = ["predict", "embed", "recall_sparse", "recall_dense", "rerank", "total"];

    pub fn get(&self, stage: &str) -> Option<f64> {
        Some(match stage {
            "predict" => self.predict,
            "embed" => self.embed,
            "recall_sparse" => self.recall_sparse,
            "recall_dense" => self.recall_dense,
            "rerank" => self.rerank,
            "total" => self.total,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    /// Final score descending, agent id ascending on ties.
    pub ranked: Vec<ScoredAgent>,
    pub candidates_sparse: usize,
    pub candidates_dense: usize,
    pub candidates_total: usize,
    pub predicted_tags: Vec<String>,
    /// Milliseconds per stage.
    pub timings: StageTimings,
    /// Set when tag prediction failed and recall fell back to the dense path.
    pub degraded: bool,
    pub mode: Mode,
    /// Fusion weight that produced `final_score`.
    pub alpha: f64,
    pub snapshot_id: u64,
}

impl DiscoveryResult {
    pub fn ids(&self) -> Vec<&str> {
        self.ranked.iter().map(|s| s.agent_id.as_str()).collect()
    }
}

/// Deduplicated union of the recall paths. Rows are ordered by dense rank
/// first, then sparse-only rows in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub rows: Vec<u32>,
    pub origins: Vec<Origin>,
    pub sparse_count: usize,
    pub dense_count: usize,
}

pub struct EngineBuilder {
    config: EngineConfig,
    embedder: Option<Arc<dyn Embedder>>,
    predictor: Option<Arc<dyn TagPredictor>>,
    generator: Arc<dyn QueryGenerator>,
    synonyms: SynonymDict,
    description_index: bool,
    ivf: Option<IvfConfig>,
    snapshot_id: u64,
}

impl EngineBuilder {
    pub fn new(config: EngineConfig) -> Self {
        EngineBuilder {
            config,
            embedder: None,
            predictor: None,
            generator: Arc::new(TemplateGenerator),
            synonyms: SynonymDict::new(),
            description_index: true,
            ivf: None,
            snapshot_id: 0,
        }
    }

    /// Defaults to the hash embedder with seed 0 at the configured dim.
    pub fn embedder(mut self, embedder: Arc<dyn Embedder>) -> Self {
        self.embedder = Some(embedder);
        self
    }

    /// Defaults to a [`LexicalTagger`] over the built tag vocabulary.
    pub fn predictor(mut self, predictor: Arc<dyn TagPredictor>) -> Self {
        self.predictor = Some(predictor);
        self
    }

    pub fn generator(mut self, generator: Arc<dyn QueryGenerator>) -> Self {
        self.generator = generator;
        self
    }

    pub fn without_expansion(self) -> Self {
        self.generator(Arc::new(NullGenerator))
    }

    pub fn synonyms(mut self, synonyms: SynonymDict) -> Self {
        self.synonyms = synonyms;
        self
    }

    /// Whether to also build the description-only context index used by
    /// `mdr` mode. On by default.
    pub fn description_index(mut self, on: bool) -> Self {
        self.description_index = on;
        self
    }

    pub fn ivf(mut self, config: IvfConfig) -> Self {
        self.ivf = Some(config);
        self
    }

    pub fn snapshot_id(mut self, id: u64) -> Self {
        self.snapshot_id = id;
        self
    }

    pub fn build(self, agents: Vec<AgentCard>) -> Result<Engine> {
        self.config.validate()?;
        let dim = self.config.dim;
        let embedder = match self.embedder {
            Some(e) => e,
            None => Arc::new(HashEmbedder::new(0, dim)?),
        };
        if embedder.dim() != dim {
            return Err(Error::Build(format!("embedder dim {} does not match configured dim {dim}", embedder.dim())));
        }
        let agents = agents.into_iter().map(AgentCard::canonicalized).collect::<Result<Vec<_>>>()?;

        let sparse = SparseIndex::build(&agents, self.synonyms)?;
        let row_of = agents.iter().enumerate().map(|(i, a)| (a.id.clone(), i as u32)).collect();

        let expander = Expander::new(self.generator, self.config.max_syn);
        let docs = agents.iter().map(|a| expander.expand(a)).collect::<Result<Vec<_>>>()?;
        let mut context = ContextIndex::build(&agents, &docs, embedder.as_ref(), dim)?;
        let mut description_context = if self.description_index {
            let plain = Expander::null();
            let docs = agents.iter().map(|a| plain.expand(a)).collect::<Result<Vec<_>>>()?;
            Some(ContextIndex::build(&agents, &docs, embedder.as_ref(), dim)?)
        } else {
            None
        };
        if let Some(ivf) = self.ivf {
            context.enable_ivf(ivf)?;
            if let Some(c) = description_context.as_mut() {
                c.enable_ivf(ivf)?;
            }
        }
        let intent = IntentIndex::build(&agents, embedder.as_ref(), dim)?;

        let predictor = match self.predictor {
            Some(p) => p,
            None => Arc::new(LexicalTagger::new(sparse.vocabulary(), sparse.synonyms())),
        };
        let index = TriIndex {
            agents,
            row_of,
            sparse,
            context,
            description_context,
            intent,
            expansion_warnings: expander.warnings(),
        };
        Ok(Engine { index: Arc::new(index), embedder, predictor, config: self.config, snapshot_id: self.snapshot_id })
    }
}

/// Immutable after build; `discover` may be called from many threads.
#[derive(Clone)]
pub struct Engine {
    index: Arc<TriIndex>,
    embedder: Arc<dyn Embedder>,
    predictor: Arc<dyn TagPredictor>,
    config: EngineConfig,
    snapshot_id: u64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Engine {
    pub fn builder(config: EngineConfig) -> EngineBuilder {
        EngineBuilder::new(config)
    }

    pub fn index(&self) -> &TriIndex {
        &self.index
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn predictor(&self) -> &Arc<dyn TagPredictor> {
        &self.predictor
    }

    pub fn snapshot_id(&self) -> u64 {
        self.snapshot_id
    }

    /// Same indices and embedder with a different tag predictor.
    pub fn with_predictor(&self, predictor: Arc<dyn TagPredictor>) -> Engine {
        Engine { predictor, ..self.clone() }
    }

    pub fn embed_query(&self, query: &str) -> Result<Vector> {
        self.embedder.embed(query)
    }

    /// Unions the recall paths for an embedded query and predicted tags.
    pub fn recall(&self, v_q: &Vector, tags: &[String], config: &EngineConfig) -> Result<CandidateSet> {
        let (sparse, dense) = self.recall_paths(v_q, tags, config)?;
        Ok(Self::union(sparse.0, dense.0))
    }

    #[allow(clippy::type_complexity)]
    fn recall_paths(
        &self,
        v_q: &Vector,
        tags: &[String],
        config: &EngineConfig,
    ) -> Result<((Vec<u32>, f64), (Vec<u32>, f64))> {
        let context = self.index.context_for(config.mode)?;
        let use_sparse = config.mode.uses_sparse() && !tags.is_empty();
        let (sparse, dense) = rayon::join(
            || {
                let t = Instant::now();
                let mut rows = if use_sparse { self.index.sparse.lookup_rows(tags) } else { Vec::new() };
                if let Some(cap) = config.sparse_cap {
                    rows.truncate(cap);
                }
                (rows, ms_since(t))
            },
            || {
                let t = Instant::now();
                context
                    .search_rows(v_q, config.dense_top_k)
                    .map(|hits| (hits.into_iter().map(|(r, _)| r).collect::<Vec<u32>>(), ms_since(t)))
            },
        );
        Ok((sparse, dense?))
    }

    fn union(sparse: Vec<u32>, dense: Vec<u32>) -> CandidateSet {
        let mut set = CandidateSet {
            sparse_count: sparse.len(),
            dense_count: dense.len(),
            rows: Vec::with_capacity(sparse.len() + dense.len()),
            origins: Vec::with_capacity(sparse.len() + dense.len()),
        };
        let mut slot: HashMap<u32, usize> = HashMap::with_capacity(sparse.len() + dense.len());
        for r in dense {
            slot.insert(r, set.rows.len());
            set.rows.push(r);
            set.origins.push(Origin { sparse: false, dense: true });
        }
        for r in sparse {
            match slot.get(&r) {
                Some(&i) => set.origins[i].sparse = true,
                None => {
                    set.rows.push(r);
                    set.origins.push(Origin { sparse: true, dense: false });
                }
            }
        }
        set
    }

    /// Scores every candidate and returns them sorted by the fused score.
    pub fn rerank(&self, v_q: &Vector, candidates: &CandidateSet, config: &EngineConfig) -> Result<Vec<ScoredAgent>> {
        let context = self.index.context_for(config.mode)?;
        if v_q.dim() != context.dim() {
            return Err(Error::Dimension { expected: context.dim(), actual: v_q.dim() });
        }
        let alpha = config.effective_alpha();
        let q = v_q.as_slice();
        let n = config.rerank_cap.map_or(candidates.rows.len(), |c| c.min(candidates.rows.len()));
        let score = |(&row, &origin): (&u32, &Origin)| {
            let r = row as usize;
            let ctx = context.score_row(r, q);
            let m = self.index.intent.matrix(r);
            let res = match config.mode {
                Mode::NoMaxsim => m.mean_pool_unchecked(q),
                _ => m.max_sim_unchecked(q),
            };
            ScoredAgent {
                agent_id: self.index.agents[r].id.clone(),
                context_score: ctx,
                resonance_score: res,
                final_score: fuse_unchecked(alpha, ctx, res),
                origin,
            }
        };
        let pairs = candidates.rows[..n].iter().zip(&candidates.origins[..n]);
        let mut scored: Vec<ScoredAgent> = if n >= 512 {
            candidates.rows[..n].par_iter().zip(&candidates.origins[..n]).map(score).collect()
        } else {
            pairs.map(score).collect()
        };
        scored.sort_by(|a, b| b.final_score.total_cmp(&a.final_score).then_with(|| a.agent_id.cmp(&b.agent_id)));
        Ok(scored)
    }

    pub fn discover(&self, query: &str) -> Result<DiscoveryResult> {
        self.discover_with(query, &self.config)
    }

    pub fn discover_with(&self, query: &str, config: &EngineConfig) -> Result<DiscoveryResult> {
        let started = Instant::now();
        config.validate()?;
        if config.dim != self.config.dim {
            return Err(Error::Dimension { expected: self.config.dim, actual: config.dim });
        }
        if query.trim().is_empty() {
            return Err(Error::input("query is empty"));
        }
        let mut timings = StageTimings::default();

        let predict = config.mode.uses_sparse();
        let (prediction, embedded) = rayon::join(
            || {
                let t = Instant::now();
                let p = predict.then(|| self.predictor.predict_tags(query, config.max_tags));
                (p, ms_since(t))
            },
            || {
                let t = Instant::now();
                (self.embedder.embed(query), ms_since(t))
            },
        );
        timings.predict = prediction.1;
        timings.embed = embedded.1;
        let v_q = embedded.0?;
        let mut degraded = false;
        let tags: Vec<String> = match prediction.0 {
            None => Vec::new(),
            Some(Ok(p)) => p.tags.into_iter().map(|t| t.tag).collect(),
            Some(Err(e)) => {
                tracing::warn!(error = %e, "tag prediction failed, falling back to dense recall");
                degraded = true;
                Vec::new()
            }
        };

        let (sparse, dense) = self.recall_paths(&v_q, &tags, config)?;
        timings.recall_sparse = sparse.1;
        timings.recall_dense = dense.1;
        let candidates = Self::union(sparse.0, dense.0);

        let t = Instant::now();
        let mut ranked = self.rerank(&v_q, &candidates, config)?;
        ranked.truncate(config.final_k);
        timings.rerank = ms_since(t);
        timings.total = ms_since(started);

        Ok(DiscoveryResult {
            ranked,
            candidates_sparse: candidates.sparse_count,
            candidates_dense: candidates.dense_count,
            candidates_total: candidates.rows.len(),
            predicted_tags: tags,
            timings,
            degraded,
            mode: config.mode,
            alpha: config.effective_alpha(),
            snapshot_id: self.snapshot_id,
        })
    }

    /// Runs every query; element `i` is the outcome of query `i`.
    pub fn discover_batch<S: AsRef<str> + Sync>(
        &self,
        queries: &[S],
        config: &EngineConfig,
    ) -> Vec<Result<DiscoveryResult>> {
        queries.par_iter().map(|q| self.discover_with(q.as_ref(), config)).collect()
    }
}
