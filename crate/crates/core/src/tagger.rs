//! Query-to-tag prediction over the closed corpus tag vocabulary.
//!
//! The engine only depends on [`TagPredictor`]; a fine-tuned small model can
//! sit behind [`HttpTagger`], while [`LexicalTagger`] is the built-in
//! deterministic baseline.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::remote::{JsonClient, RetryPolicy};
use crate::sparse::SynonymDict;
use crate::text::tokenize;

pub const SLM_URL_ENV: &str = "GRAIL_SLM_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTag {
    pub tag: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TagPrediction {
    /// Score descending, ties alphabetical, no duplicates.
    pub tags: Vec<ScoredTag>,
    pub elapsed_ms: f64,
}

impl TagPrediction {
    pub fn tag_names(&self) -> Vec<&str> {
        self.tags.iter().map(|t| t.tag.as_str()).collect()
    }

    fn finish(mut tags: Vec<ScoredTag>, max_tags: usize, started: Instant) -> Self {
        tags.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tag.cmp(&b.tag)));
        let mut seen = HashSet::new();
        tags.retain(|t| seen.insert(t.tag.clone()));
        tags.truncate(max_tags);
        TagPrediction { tags, elapsed_ms: started.elapsed().as_secs_f64() * 1e3 }
    }
}

pub trait TagPredictor: Send + Sync {
    fn predict_tags(&self, query: &str, max_tags: usize) -> Result<TagPrediction>;
}

fn check_query(query: &str, max_tags: usize) -> Result<()> {
    if query.trim().is_empty() {
        return Err(Error::input("query is empty"));
    }
    if max_tags == 0 {
        return Err(Error::input("max_tags must be positive"));
    }
    Ok(())
}

/// Token-overlap tagger.
///
/// `score(tag) = |Q ∩ tokens(tag)| / |tokens(tag)|` where `Q` is the query
/// token set, extended with the tokens of the canonical tag of every alias
/// whose tokens all occur in the query.
#[derive(Debug, Clone)]
pub struct LexicalTagger {
    tags: Vec<(String, usize)>,
    by_token: HashMap<String, Vec<u32>>,
    aliases: Vec<(BTreeSet<String>, Vec<String>)>,
}

impl LexicalTagger {
    pub fn new<'a>(vocabulary: impl IntoIterator<Item = &'a str>, synonyms: &SynonymDict) -> Self {
        let mut tags = Vec::new();
        let mut by_token: HashMap<String, Vec<u32>> = HashMap::new();
        let vocab: BTreeSet<&str> = vocabulary.into_iter().collect();
        for tag in vocab {
            let tokens: BTreeSet<String> = tokenize(tag).into_iter().collect();
            if tokens.is_empty() {
                continue;
            }
            let i = tags.len() as u32;
            for t in &tokens {
                by_token.entry(t.clone()).or_default().push(i);
            }
            tags.push((tag.to_string(), tokens.len()));
        }
        let aliases = synonyms
            .iter()
            .map(|(alias, canonical)| (tokenize(alias).into_iter().collect(), tokenize(canonical)))
            .filter(|(a, _): &(BTreeSet<String>, _)| !a.is_empty())
            .collect();
        LexicalTagger { tags, by_token, aliases }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.tags.len()
    }
}

impl TagPredictor for LexicalTagger {
    fn predict_tags(&self, query: &str, max_tags: usize) -> Result<TagPrediction> {
        let started = Instant::now();
        check_query(query, max_tags)?;
        if self.tags.is_empty() {
            return Err(Error::NotReady("tag vocabulary is empty".into()));
        }
        let mut q: BTreeSet<String> = tokenize(query).into_iter().collect();
        let expansions: Vec<String> = self
            .aliases
            .iter()
            .filter(|(alias, _)| alias.is_subset(&q))
            .flat_map(|(_, canonical)| canonical.iter().cloned())
            .collect();
        q.extend(expansions);

        let mut hits: HashMap<u32, usize> = HashMap::new();
        for token in &q {
            if let Some(list) = self.by_token.get(token) {
                for &i in list {
                    *hits.entry(i).or_default() += 1;
                }
            }
        }
        let scored = hits
            .into_iter()
            .map(|(i, n)| {
                let (tag, len) = &self.tags[i as usize];
                ScoredTag { tag: tag.clone(), score: n as f64 / *len as f64 }
            })
            .collect();
        Ok(TagPrediction::finish(scored, max_tags, started))
    }
}

/// Evaluation-only predictor that answers each known query with a fixed tag
/// list, typically the ground-truth agent's tags. Unknown queries get an
/// empty prediction.
#[derive(Debug, Clone, Default)]
pub struct OracleTagger {
    answers: HashMap<String, Vec<String>>,
}

impl OracleTagger {
    pub fn new(answers: HashMap<String, Vec<String>>) -> Self {
        OracleTagger { answers }
    }

    pub fn insert(&mut self, query: impl Into<String>, tags: Vec<String>) {
        self.answers.insert(query.into(), tags);
    }
}

impl TagPredictor for OracleTagger {
    fn predict_tags(&self, query: &str, max_tags: usize) -> Result<TagPrediction> {
        let started = Instant::now();
        check_query(query, max_tags)?;
        let tags = self
            .answers
            .get(query)
            .map(|tags| tags.iter().map(|t| ScoredTag { tag: t.clone(), score: 1.0 }).collect())
            .unwrap_or_default();
        // Keep the given order: the oracle's list is already its ranking.
        let mut p = TagPrediction { tags, elapsed_ms: 0.0 };
        p.tags.truncate(max_tags);
        p.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok(p)
    }
}

#[derive(Serialize)]
struct PredictRequest<'a> {
    query: &'a str,
    max_tags: usize,
}

#[derive(Deserialize)]
struct PredictResponse {
    tags: Vec<ScoredTag>,
}

/// Client for `POST {endpoint}/predict_tags`.
///
/// Responses are filtered to the known vocabulary; dropped out-of-vocabulary
/// tags are counted in [`dropped_out_of_vocabulary`](Self::dropped_out_of_vocabulary).
pub struct HttpTagger {
    client: JsonClient,
    vocabulary: HashSet<String>,
    synonyms: SynonymDict,
    dropped: AtomicU64,
}

impl HttpTagger {
    pub const DEFAULT_DEADLINE: Duration = Duration::from_millis(350);
    pub const DEFAULT_IN_FLIGHT: usize = 2;

    pub fn new<'a>(
        endpoint: &str,
        vocabulary: impl IntoIterator<Item = &'a str>,
        synonyms: SynonymDict,
        deadline: Duration,
        max_in_flight: usize,
    ) -> Self {
        HttpTagger {
            client: JsonClient::new(endpoint, deadline, max_in_flight, RetryPolicy::ONCE),
            vocabulary: vocabulary.into_iter().map(str::to_string).collect(),
            synonyms,
            dropped: AtomicU64::new(0),
        }
    }

    pub fn dropped_out_of_vocabulary(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

impl TagPredictor for HttpTagger {
    fn predict_tags(&self, query: &str, max_tags: usize) -> Result<TagPrediction> {
        let started = Instant::now();
        check_query(query, max_tags)?;
        if self.vocabulary.is_empty() {
            return Err(Error::NotReady("tag vocabulary is empty".into()));
        }
        let resp: PredictResponse = self.client.post("predict_tags", &PredictRequest { query, max_tags })?;
        let mut kept = Vec::with_capacity(resp.tags.len());
        for t in resp.tags {
            let tag = self.synonyms.resolve(&t.tag);
            if self.vocabulary.contains(&tag) && t.score.is_finite() {
                kept.push(ScoredTag { tag, score: t.score.clamp(0.0, 1.0) });
            } else {
                self.dropped.fetch_add(1, Ordering::Relaxed);
            }
        }
        Ok(TagPrediction::finish(kept, max_tags, started))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagger() -> LexicalTagger {
        let vocab = ["workday", "hr", "api integration", "onboarding", "payroll"];
        let syn: SynonymDict = [("human resources", "hr")].into_iter().collect();
        LexicalTagger::new(vocab, &syn)
    }

    #[test]
    fn exact_hit() {
        let p = tagger().predict_tags("workday onboarding api", 5).unwrap();
        let workday = p.tags.iter().find(|t| t.tag == "workday").unwrap();
        assert!(workday.score > 0.0);
        // Full matches first, alphabetical among equals, then the half match.
        assert_eq!(p.tag_names(), vec!["onboarding", "workday", "api integration"]);
        assert_eq!(p.tags[2].score, 0.5);
    }

    #[test]
    fn no_overlap_is_empty() {
        let p = tagger().predict_tags("quantum chromodynamics", 5).unwrap();
        assert!(p.tags.is_empty());
    }

    #[test]
    fn synonym_expands_query() {
        let p = tagger().predict_tags("help my human resources team", 5).unwrap();
        assert_eq!(p.tag_names(), vec!["hr"]);
    }

    #[test]
    fn truncates_and_validates() {
        let p = tagger().predict_tags("workday onboarding api payroll hr", 2).unwrap();
        assert_eq!(p.tags.len(), 2);
        assert!(matches!(tagger().predict_tags(" ", 2), Err(Error::Input(_))));
        let empty = LexicalTagger::new(Vec::<&str>::new(), &SynonymDict::new());
        assert!(matches!(empty.predict_tags("x", 2), Err(Error::NotReady(_))));
    }

    #[test]
    fn oracle_answers_known_queries() {
        let mut o = OracleTagger::default();
        o.insert("q", vec!["b".into(), "a".into()]);
        assert_eq!(o.predict_tags("q", 5).unwrap().tag_names(), vec!["b", "a"]);
        assert_eq!(o.predict_tags("q", 1).unwrap().tag_names(), vec!["b"]);
        assert!(o.predict_tags("other", 5).unwrap().tags.is_empty());
    }
}
