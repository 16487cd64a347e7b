//! Seeded synthetic benchmark corpora shaped like an industry / sub-domain /
//! agent taxonomy, plus JSONL I/O and tag statistics.
//!
//! Each industry expands into `subdomains_per_industry` sub-domains with
//! three tags each (tag sets are pairwise disjoint inside one industry), and
//! each sub-domain holds `agents_per_subdomain` agents. An agent carries one
//! industry tag, its sub-domain's three tags and one to four functional tags
//! of the form `"{object} {action}"` that are unique within the industry.

mod words;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentCard, Intent, QueryRecord};
use crate::text::tokenize;
use words::*;

pub const MAX_INDUSTRIES: usize = 154;
pub const AGENTS_FILE: &str = "agents.jsonl";
pub const QUERIES_FILE: &str = "queries.jsonl";

const SUBDOMAIN_TAGS: usize = 3;
const MAX_FUNCTIONAL_TAGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomySpec {
    pub seed: u64,
    pub num_industries: usize,
    pub subdomains_per_industry: usize,
    pub agents_per_subdomain: usize,
    pub examples_per_agent: usize,
    pub queries_per_agent: usize,
}

impl TaxonomySpec {
    pub fn new(seed: u64, num_industries: usize) -> Self {
        TaxonomySpec {
            seed,
            num_industries,
            subdomains_per_industry: 6,
            agents_per_subdomain: 10,
            examples_per_agent: 3,
            queries_per_agent: 3,
        }
    }

    pub fn total_agents(&self) -> usize {
        self.num_industries * self.subdomains_per_industry * self.agents_per_subdomain
    }

    pub fn total_queries(&self) -> usize {
        self.total_agents() * self.queries_per_agent
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.num_industries,
            self.subdomains_per_industry,
            self.agents_per_subdomain,
            self.examples_per_agent,
            self.queries_per_agent,
        ];
        if fields.contains(&0) {
            return Err(Error::input("all taxonomy counts must be positive"));
        }
        if self.num_industries > MAX_INDUSTRIES {
            return Err(Error::input(format!("at most {MAX_INDUSTRIES} industries are available")));
        }
        if self.subdomains_per_industry * SUBDOMAIN_TAGS > SUBDOMAIN_TERMS.len() {
            return Err(Error::input("too many sub-domains per industry for the term pool"));
        }
        let per_industry = self.subdomains_per_industry * self.agents_per_subdomain * MAX_FUNCTIONAL_TAGS;
        if per_industry > OBJECTS.len() * ACTIONS.len() {
            return Err(Error::input("too many agents per industry for the functional tag pool"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdomainNode {
    pub name: String,
    pub tags: Vec<String>,
    pub agent_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndustryNode {
    pub tag: String,
    pub subdomains: Vec<SubdomainNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedCorpus {
    pub agents: Vec<AgentCard>,
    pub queries: Vec<QueryRecord>,
    /// Empty for corpora loaded from files.
    pub taxonomy: Vec<IndustryNode>,
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn join_natural(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

struct Functional {
    object: &'static str,
    action: &'static str,
}

impl Functional {
    fn tag(&self) -> String {
        format!("{} {}", self.object, self.action)
    }
}

struct AgentDraft {
    card: AgentCard,
    queries: Vec<QueryRecord>,
}

struct IndustryPlan<'a> {
    index: usize,
    tag: String,
    subdomain_terms: Vec<&'a str>,
}

fn generate_industry(spec: &TaxonomySpec, plan: &IndustryPlan<'_>) -> (IndustryNode, Vec<AgentDraft>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, plan.index as u64 + 1));
    let mut combos: Vec<Functional> =
        OBJECTS.iter().flat_map(|&object| ACTIONS.iter().map(move |&action| Functional { object, action })).collect();
    combos.shuffle(&mut rng);
    let mut combos = combos.into_iter();

    let per_industry = spec.subdomains_per_industry * spec.agents_per_subdomain;
    let mut node = IndustryNode { tag: plan.tag.clone(), subdomains: Vec::new() };
    let mut drafts = Vec::with_capacity(per_industry);
    for s in 0..spec.subdomains_per_industry {
        let sub_tags: Vec<String> =
            plan.subdomain_terms[s * SUBDOMAIN_TAGS..(s + 1) * SUBDOMAIN_TAGS].iter().map(|t| t.to_string()).collect();
        let mut sub = SubdomainNode {
            name: format!("{} {} operations", plan.tag, join_natural(&sub_tags)),
            tags: sub_tags.clone(),
            agent_ids: Vec::new(),
        };
        for slot in 0..spec.agents_per_subdomain {
            let ordinal = (plan.index * spec.subdomains_per_industry + s) * spec.agents_per_subdomain + slot;
            let id = format!("ag{ordinal:05}");
            let nf = rng.random_range(1..=MAX_FUNCTIONAL_TAGS);
            let functional: Vec<Functional> = combos.by_ref().take(nf).collect();
            sub.agent_ids.push(id.clone());
            drafts.push(generate_agent(spec, &mut rng, id, &plan.tag, &sub_tags, &functional));
        }
        node.subdomains.push(sub);
    }
    (node, drafts)
}

fn generate_agent(
    spec: &TaxonomySpec,
    rng: &mut ChaCha8Rng,
    id: String,
    industry: &str,
    sub_tags: &[String],
    functional: &[Functional],
) -> AgentDraft {
    let f_tags: Vec<String> = functional.iter().map(Functional::tag).collect();
    let primary = &functional[0];
    let name = format!(
        "{} {} {}",
        capitalize(primary.object),
        capitalize(primary.action),
        NAME_SUFFIXES.choose(rng).expect("non-empty pool")
    );
    let feature = *FEATURES.choose(rng).expect("non-empty pool");

    let mut tags = Vec::with_capacity(1 + SUBDOMAIN_TAGS + functional.len());
    tags.push(industry.to_string());
    tags.extend(sub_tags.iter().cloned());
    tags.extend(f_tags.iter().cloned());

    // Description: fixed opening sentences, then shuffled fillers up to length.
    let mut sentences = vec![
        format!("{name} is a specialist agent for the {industry} sector, focused on {} work.", join_natural(sub_tags)),
        format!("It delivers {} for teams that need dependable, repeatable results.", join_natural(&f_tags)),
        format!(
            "Its {feature} design keeps {} handoffs consistent from intake to sign-off.",
            sub_tags.choose(rng).expect("three sub-domain tags")
        ),
    ];
    let mut fillers: Vec<&str> = FILLERS.to_vec();
    fillers.shuffle(rng);
    let mut words = sentences.iter().map(|s| word_count(s)).sum::<usize>();
    for filler in fillers {
        if words >= 60 {
            break;
        }
        let s = filler
            .replace("{f}", feature)
            .replace("{s}", sub_tags.choose(rng).expect("three sub-domain tags"))
            .replace("{i}", industry);
        words += word_count(&s);
        sentences.push(s);
    }
    let description = sentences.join(" ");
    debug_assert!((50..=100).contains(&word_count(&description)), "{description}");

    // Each example grounds one functional tag; templates differ per example.
    let templates: Vec<&str> = EXAMPLE_TEMPLATES.choose_multiple(rng, spec.examples_per_agent).copied().collect();
    let details: Vec<&str> = DETAILS.choose_multiple(rng, spec.examples_per_agent).copied().collect();
    let systems: Vec<&str> = SYSTEMS.choose_multiple(rng, spec.examples_per_agent).copied().collect();
    let examples: Vec<String> = (0..spec.examples_per_agent)
        .map(|j| {
            let f = &functional[j % functional.len()];
            templates[j % templates.len()]
                .replace("{o}", f.object)
                .replace("{a}", f.action)
                .replace("{d}", details[j % details.len()])
                .replace("{y}", systems[j % systems.len()])
                .replace("{p}", PERIODS.choose(rng).expect("non-empty pool"))
                .replace("{s}", &sub_tags[j % sub_tags.len()])
        })
        .collect();

    let queries = (0..spec.queries_per_agent)
        .map(|k| {
            let intent = Intent::ALL[k % Intent::ALL.len()];
            let text = match intent {
                Intent::Capability => {
                    // Targets one specific example: its functional tag plus its detail word.
                    let j = rng.random_range(0..spec.examples_per_agent);
                    let f = &functional[j % functional.len()];
                    format!(
                        "I need an agent that can {} {} {} {} for {industry} in {}",
                        VERBS.choose(rng).expect("non-empty pool"),
                        details[j % details.len()],
                        f.object,
                        f.action,
                        systems[j % systems.len()]
                    )
                }
                Intent::Scenario => {
                    // A pain point around one example's sub-domain and detail.
                    let j = rng.random_range(0..spec.examples_per_agent);
                    let f = &functional[j % functional.len()];
                    format!(
                        "our {industry} team struggles with {} {} {} as {} {} work accumulates in {}",
                        PAIN_ADJECTIVES.choose(rng).expect("non-empty pool"),
                        sub_tags[j % sub_tags.len()],
                        PAIN_NOUNS.choose(rng).expect("non-empty pool"),
                        details[j % details.len()],
                        f.object,
                        systems[j % systems.len()]
                    )
                }
                Intent::Keyword => format!("{} {feature}", f_tags.join(" ")),
            };
            QueryRecord { text, truth_agent_id: id.clone(), intent }
        })
        .collect();

    let card = AgentCard { id, name, description, tags, examples };
    AgentDraft { card, queries }
}

/// Generates a corpus; a pure function of `spec`.
pub fn generate(spec: &TaxonomySpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0));
    let mut industries: Vec<String> =
        QUALIFIERS.iter().flat_map(|q| DOMAINS.iter().map(move |d| format!("{q} {d}"))).collect();
    industries.shuffle(&mut rng);
    let mut terms: Vec<&str> = SUBDOMAIN_TERMS.to_vec();
    terms.shuffle(&mut rng);

    let per_industry_terms = spec.subdomains_per_industry * SUBDOMAIN_TAGS;
    let plans: Vec<IndustryPlan<'_>> = (0..spec.num_industries)
        .map(|i| IndustryPlan {
            index: i,
            tag: industries[i].clone(),
            subdomain_terms: (0..per_industry_terms)
                .map(|j| terms[(i * per_industry_terms + j) % terms.len()])
                .collect(),
        })
        .collect();

    let parts: Vec<(IndustryNode, Vec<AgentDraft>)> = plans.par_iter().map(|p| generate_industry(spec, p)).collect();

    let mut corpus = GeneratedCorpus::default();
    let mut seen_examples: HashSet<String> = HashSet::new();
    for (node, drafts) in parts {
        corpus.taxonomy.push(node);
        for mut d in drafts {
            for ex in d.card.examples.iter_mut() {
                if !seen_examples.insert(ex.clone()) {
                    ex.push_str(&format!(" ({})", d.card.id));
                    seen_examples.insert(ex.clone());
                }
            }
            corpus.agents.push(d.card);
            corpus.queries.append(&mut d.queries);
        }
    }
    check_keyword_solvability(&corpus)?;
    Ok(corpus)
}

/// Every keyword query must contain its truth agent's functional tag tokens.
fn check_keyword_solvability(corpus: &GeneratedCorpus) -> Result<()> {
    let by_id: HashMap<&str, &AgentCard> = corpus.agents.iter().map(|a| (a.id.as_str(), a)).collect();
    for q in corpus.queries.iter().filter(|q| q.intent == Intent::Keyword) {
        let agent = by_id[q.truth_agent_id.as_str()];
        let tokens: HashSet<String> = tokenize(&q.text).into_iter().collect();
        let unique = &agent.tags[1 + SUBDOMAIN_TAGS..];
        if !unique.iter().flat_map(|t| tokenize(t)).all(|t| tokens.contains(&t)) {
            return Err(Error::Integrity(format!("keyword query {:?} misses tags of {}", q.text, agent.id)));
        }
    }
    Ok(())
}

fn write_lines<T: Serialize>(items: &[T], w: &mut impl Write) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

impl GeneratedCorpus {
    pub fn agents_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_lines(&self.agents, &mut buf)?;
        Ok(buf)
    }

    pub fn queries_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_lines(&self.queries, &mut buf)?;
        Ok(buf)
    }

    /// Writes `agents.jsonl` and `queries.jsonl` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(AGENTS_FILE))?);
        write_lines(&self.agents, &mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(QUERIES_FILE))?);
        write_lines(&self.queries, &mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn agent(&self, id: &str) -> Option<&AgentCard> {
        self.agents.iter().find(|a| a.id == id)
    }
}

/// Reads agent cards from JSON Lines. Cards without an `Id` are assigned
/// `agent-{line}`; blank lines are skipped.
pub fn read_agents(path: impl AsRef<Path>) -> Result<Vec<AgentCard>> {
    let reader = BufReader::new(File::open(path)?);
    let mut agents = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut card: AgentCard =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if card.id.trim().is_empty() {
            card.id = format!("agent-{lineno}");
        }
        let card = card.canonicalized().map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if !ids.insert(card.id.clone()) {
            return Err(Error::DuplicateId(card.id));
        }
        agents.push(card);
    }
    Ok(agents)
}

pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<QueryRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

/// Loads a corpus and checks that every query references a known agent.
pub fn load_corpus(agents_path: impl AsRef<Path>, queries_path: impl AsRef<Path>) -> Result<GeneratedCorpus> {
    let agents = read_agents(agents_path)?;
    let queries = read_queries(queries_path)?;
    let ids: HashSet<&str> = agents.iter().map(|a| a.id.as_str()).collect();
    if let Some(q) = queries.iter().find(|q| !ids.contains(q.truth_agent_id.as_str())) {
        return Err(Error::Integrity(format!("query {:?} references unknown agent {}", q.text, q.truth_agent_id)));
    }
    Ok(GeneratedCorpus { agents, queries, taxonomy: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub agents: usize,
    pub queries: usize,
    pub unique_tags: usize,
    /// Tags by frequency descending, ties alphabetical.
    pub tag_frequencies: Vec<(String, usize)>,
    /// Frequency to number of tags with that frequency.
    pub frequency_histogram: BTreeMap<usize, usize>,
    /// `(rank, ln(frequency))`, ranks starting at 1.
    pub log_rank_curve: Vec<(usize, f64)>,
    pub max_agents_per_tag: usize,
    pub mean_agents_per_tag: f64,
}

pub fn corpus_stats(corpus: &GeneratedCorpus) -> Result<CorpusStats> {
    if corpus.agents.is_empty() {
        return Err(Error::input("corpus is empty"));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for a in &corpus.agents {
        for t in &a.tags {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut tag_frequencies: Vec<(String, usize)> = freq.into_iter().map(|(t, n)| (t.to_string(), n)).collect();
    tag_frequencies.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut frequency_histogram = BTreeMap::new();
    for (_, n) in &tag_frequencies {
        *frequency_histogram.entry(*n).or_default() += 1;
    }
    let total: usize = tag_frequencies.iter().map(|(_, n)| n).sum();
    Ok(CorpusStats {
        agents: corpus.agents.len(),
        queries: corpus.queries.len(),
        unique_tags: tag_frequencies.len(),
        log_rank_curve: tag_frequencies.iter().enumerate().map(|(i, (_, n))| (i + 1, (*n as f64).ln())).collect(),
        max_agents_per_tag: tag_frequencies.first().map_or(0, |(_, n)| *n),
        mean_agents_per_tag: total as f64 / tag_frequencies.len() as f64,
        tag_frequencies,
        frequency_histogram,
    })
}
