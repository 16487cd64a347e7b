//! Inverted tag index: canonical tag to sorted agent postings, with alias
//! canonicalization applied both when indexing and when looking up.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::model::{canonical_tag, AgentCard};

/// Alias to canonical tag, both stored canonicalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymDict(BTreeMap<String, String>);

impl SynonymDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) {
        let (alias, canonical) = (canonical_tag(alias), canonical_tag(canonical));
        if !alias.is_empty() && !canonical.is_empty() && alias != canonical {
            self.0.insert(alias, canonical);
        }
    }

    /// Reads a JSON object of `{"alias": "canonical", ...}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(json)?;
        Ok(raw.iter().collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical form of `tag`: lowercased, trimmed, and resolved through
    /// the alias table (one hop).
    pub fn resolve(&self, tag: &str) -> String {
        let tag = canonical_tag(tag);
        match self.0.get(&tag) {
            Some(c) => c.clone(),
            None => tag,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<A: AsRef<str>, C: AsRef<str>> FromIterator<(A, C)> for SynonymDict {
    fn from_iter<I: IntoIterator<Item = (A, C)>>(iter: I) -> Self {
        let mut d = SynonymDict::new();
        for (a, c) in iter {
            d.insert(a.as_ref(), c.as_ref());
        }
        d
    }
}

#[derive(Debug, Clone)]
pub struct SparseIndex {
    /// Agent ids in ascending order; postings hold positions into this list.
    sorted_ids: Vec<String>,
    /// Input row of the agent at each sorted position.
    rows: Vec<u32>,
    postings: BTreeMap<String, Vec<u32>>,
    synonyms: SynonymDict,
}

impl SparseIndex {
    pub fn build(agents: &[AgentCard], synonyms: SynonymDict) -> Result<Self> {
        let mut order: Vec<u32> = (0..agents.len() as u32).collect();
        order.sort_by(|&a, &b| agents[a as usize].id.cmp(&agents[b as usize].id));
        for w in order.windows(2) {
            if agents[w[0] as usize].id == agents[w[1] as usize].id {
                return Err(Error::DuplicateId(agents[w[0] as usize].id.clone()));
            }
        }

        let mut postings: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (pos, &row) in order.iter().enumerate() {
            for tag in &agents[row as usize].tags {
                let list = postings.entry(synonyms.resolve(tag)).or_default();
                // Positions arrive in ascending order, so only the tail can repeat.
                if list.last() != Some(&(pos as u32)) {
                    list.push(pos as u32);
                }
            }
        }
        for (_, canonical) in synonyms.iter() {
            postings.entry(canonical.to_string()).or_default();
        }

        Ok(SparseIndex {
            sorted_ids: order.iter().map(|&r| agents[r as usize].id.clone()).collect(),
            rows: order,
            postings,
            synonyms,
        })
    }

    /// Canonical tags, ascending.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn contains_tag(&self, tag: &str) -> bool {
        self.postings.contains_key(&self.synonyms.resolve(tag))
    }

    pub fn synonyms(&self) -> &SynonymDict {
        &self.synonyms
    }

    pub fn agent_count(&self) -> usize {
        self.sorted_ids.len()
    }

    /// Agent ids under `tag` (after canonicalization), ascending.
    pub fn postings(&self, tag: &str) -> Option<Vec<&str>> {
        self.postings
            .get(&self.synonyms.resolve(tag))
            .map(|p| p.iter().map(|&i| self.sorted_ids[i as usize].as_str()).collect())
    }

    fn merged_positions<S: AsRef<str>>(&self, tags: &[S]) -> Vec<u32> {
        let lists: Vec<&Vec<u32>> = tags
            .iter()
            .map(|t| self.synonyms.resolve(t.as_ref()))
            .unique()
            .filter_map(|t| self.postings.get(&t))
            .collect();
        lists.into_iter().map(|l| l.iter().copied()).kmerge().dedup().collect()
    }

    /// Union of the postings of every tag (OR semantics). Unknown tags
    /// contribute nothing. Ids are returned in ascending order.
    pub fn lookup<S: AsRef<str>>(&self, tags: &[S]) -> Vec<&str> {
        self.merged_positions(tags).into_iter().map(|i| self.sorted_ids[i as usize].as_str()).collect()
    }

    /// Same set as [`lookup`](Self::lookup), as input rows in ascending id order.
    pub fn lookup_rows<S: AsRef<str>>(&self, tags: &[S]) -> Vec<u32> {
        self.merged_positions(tags).into_iter().map(|i| self.rows[i as usize]).collect()
    }

    /// Sanity check of the structural invariants; used by tests.
    pub fn check_invariants(&self, agents: &[AgentCard]) -> Result<()> {
        let ids: HashSet<&str> = self.sorted_ids.iter().map(String::as_str).collect();
        for (tag, list) in &self.postings {
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Integrity(format!("postings for {tag:?} not strictly sorted")));
            }
        }
        for a in agents {
            if !ids.contains(a.id.as_str()) {
                return Err(Error::Integrity(format!("agent {} missing", a.id)));
            }
            for t in &a.tags {
                if !self.postings(t).is_some_and(|p| p.contains(&a.id.as_str())) {
                    return Err(Error::Integrity(format!("agent {} missing under {t:?}", a.id)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(id: &str, tags: &[&str]) -> AgentCard {
        AgentCard::new(id, id, "some description", tags.iter().copied(), ["example"]).unwrap()
    }

    #[test]
    fn minimal_index() {
        let agents = vec![card("b", &["hr", "security"]), card("a", &["HR"])];
        let idx = SparseIndex::build(&agents, SynonymDict::new()).unwrap();
        assert_eq!(idx.postings("hr").unwrap(), vec!["a", "b"]);
        assert_eq!(idx.lookup(&["hr"]), vec!["a", "b"]);
        assert_eq!(idx.lookup_rows(&["hr"]), vec![1, 0]);
        assert!(idx.lookup(&["nonexistent"]).is_empty());
        assert!(idx.lookup::<&str>(&[]).is_empty());
        assert_eq!(idx.vocabulary().collect::<Vec<_>>(), vec!["hr", "security"]);
        idx.check_invariants(&agents).unwrap();
    }

    #[test]
    fn synonyms_apply_at_build_and_lookup() {
        let agents = vec![card("a", &["human-resources"]), card("b", &["hr"])];
        let syn: SynonymDict = [("Human-Resources", "HR"), ("people ops", "hr")].into_iter().collect();
        let idx = SparseIndex::build(&agents, syn).unwrap();
        assert_eq!(idx.postings("hr").unwrap(), vec!["a", "b"]);
        assert_eq!(idx.lookup(&["people ops"]), vec!["a", "b"]);
        assert!(!idx.vocabulary().any(|t| t == "human-resources"));
        idx.check_invariants(&agents).unwrap();
    }

    #[test]
    fn alias_target_created_when_absent() {
        let syn: SynonymDict = [("cfo", "finance")].into_iter().collect();
        let idx = SparseIndex::build(&[card("a", &["hr"])], syn).unwrap();
        assert_eq!(idx.postings("finance").unwrap(), Vec::<&str>::new());
        assert_eq!(idx.vocabulary_size(), 2);
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = SparseIndex::build(&[card("x", &["a"]), card("x", &["b"])], SynonymDict::new());
        assert!(matches!(err, Err(Error::DuplicateId(id)) if id == "x"));
    }

    #[test]
    fn synonym_json() {
        let d = SynonymDict::from_json(r#"{"Human-Resources": "hr"}"#).unwrap();
        assert_eq!(d.resolve(" HUMAN-resources "), "hr");
        assert!(SynonymDict::from_json("[1]").is_err());
    }
}
