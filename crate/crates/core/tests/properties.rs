//! Randomized invariants of the sparse, context and intent indices.

use std::collections::BTreeSet;

use discovery_core::context::ContextIndex;
use discovery_core::intent::{max_sim, mean_pool_raw_dot, ExampleMatrix};
use discovery_core::{AgentCard, IvfConfig, SparseIndex, SynonymDict, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAG_POOL: [&str; 12] =
    ["hr", "payroll", "legal", "tax", "ops", "travel", "crm", "sales", "ml", "search", "billing", "audit"];

fn agents_strategy() -> impl Strategy<Value = Vec<AgentCard>> {
    prop::collection::vec(prop::collection::btree_set(0..TAG_POOL.len(), 1..5), 1..25).prop_map(|tag_sets| {
        tag_sets
            .into_iter()
            .enumerate()
            .map(|(i, tags)| {
                let tags: Vec<&str> = tags.into_iter().map(|t| TAG_POOL[t]).collect();
                AgentCard::new(format!("a{i:03}"), "n", "d", tags, ["e"]).unwrap()
            })
            .collect()
    })
}

fn tags_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(TAG_POOL.to_vec()).prop_map(String::from), 0..5)
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let raw: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        if let Ok(v) = Vector::normalize(&raw, dim) {
            return v;
        }
    }
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<f32> {
    (0..rows).flat_map(|_| unit(rng, dim).into_inner()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lookup_distributes_over_union(agents in agents_strategy(), a in tags_strategy(), b in tags_strategy()) {
        let idx = SparseIndex::build(&agents, SynonymDict::new()).unwrap();
        let both: Vec<String> = a.iter().chain(&b).cloned().collect();
        let merged: BTreeSet<&str> = idx.lookup(&a).into_iter().chain(idx.lookup(&b)).collect();
        prop_assert_eq!(idx.lookup(&both), merged.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn lookup_matches_linear_scan(agents in agents_strategy(), q in tags_strategy()) {
        let idx = SparseIndex::build(&agents, SynonymDict::new()).unwrap();
        let mut expected: Vec<&str> =
            agents.iter().filter(|a| a.tags.iter().any(|t| q.contains(t))).map(|a| a.id.as_str()).collect();
        expected.sort_unstable();
        prop_assert_eq!(idx.lookup(&q), expected);
        idx.check_invariants(&agents).unwrap();
    }

    #[test]
    fn postings_round_trip(agents in agents_strategy()) {
        let idx = SparseIndex::build(&agents, SynonymDict::new()).unwrap();
        for a in &agents {
            for t in &a.tags {
                prop_assert!(idx.postings(t).unwrap().contains(&a.id.as_str()));
            }
        }
        for tag in idx.vocabulary() {
            let ids = idx.postings(tag).unwrap();
            prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
            for id in ids {
                let agent = agents.iter().find(|a| a.id == id).unwrap();
                prop_assert!(agent.tags.iter().any(|t| t == tag));
            }
        }
    }

    #[test]
    fn max_sim_dominates_and_grows(seed in any::<u64>(), rows in 1usize..12, dim in 2usize..48) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = matrix(&mut rng, rows, dim);
        let q = unit(&mut rng, dim);
        let m = ExampleMatrix::new(&data, dim).unwrap();
        let best = max_sim(&q, &m).unwrap();
        prop_assert!(best >= mean_pool_raw_dot(&q, &m).unwrap() - 1e-12);

        let mut grown = data.clone();
        grown.extend(unit(&mut rng, dim).into_inner());
        let after = max_sim(&q, &ExampleMatrix::new(&grown, dim).unwrap()).unwrap();
        prop_assert!(after >= best);
    }
}

fn full_scan(index: &ContextIndex, q: &Vector, k: usize) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = (0..index.len())
        .map(|i| {
            let s: f64 = index.row(i).iter().zip(q.as_slice()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
            (index.ids()[i].clone(), s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

#[test]
fn exact_search_equals_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dim = 64;
    let vectors: Vec<Vector> = (0..1000).map(|_| unit(&mut rng, dim)).collect();
    let ids = (0..1000).map(|i| format!("agent-{i:04}")).collect();
    let index = ContextIndex::from_vectors(ids, &vectors, dim).unwrap();
    for k in [1, 10, 50] {
        for _ in 0..30 {
            let q = unit(&mut rng, dim);
            assert_eq!(index.search(&q, k).unwrap(), full_scan(&index, &q, k));
        }
    }
}

#[test]
fn ivf_recall_on_clustered_data() {
    use discovery_core::benchgen::{generate, TaxonomySpec};
    use discovery_core::context::{Expander, TemplateGenerator};
    use discovery_core::embed::{Embedder, HashEmbedder};
    use std::sync::Arc;

    let corpus = generate(&TaxonomySpec::new(5, 30)).unwrap();
    let embedder = HashEmbedder::new(0, 384).unwrap();
    let expander = Expander::new(Arc::new(TemplateGenerator), 5);
    let docs: Vec<_> = corpus.agents.iter().map(|a| expander.expand(a).unwrap()).collect();
    let exact = ContextIndex::build(&corpus.agents, &docs, &embedder, 384).unwrap();
    let mut ivf = exact.clone();
    ivf.enable_ivf(IvfConfig { seed: 3, ..IvfConfig::default() }).unwrap();

    let k = 10;
    let mut found = 0;
    for q in corpus.queries.iter().take(500) {
        let v = embedder.embed(&q.text).unwrap();
        let truth: BTreeSet<String> = exact.search(&v, k).unwrap().into_iter().map(|(id, _)| id).collect();
        found += ivf.search(&v, k).unwrap().into_iter().filter(|(id, _)| truth.contains(id)).count();
    }
    let recall = found as f64 / (500 * k) as f64;
    assert!(recall >= 0.95, "ivf recall@{k} = {recall:.4}");
}
