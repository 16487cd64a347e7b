//! Text embedding providers.
//!
//! [`HashEmbedder`] is the offline provider: feature hashing of token
//! unigrams and bigrams into `dim` signed buckets. It needs no model weights
//! and keeps lexical overlap visible as cosine similarity, which is enough to
//! make benchmark rankings meaningful. [`HttpEmbedder`] speaks to an external
//! sentence-encoder service.

use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Vector, DEFAULT_DIM};
use crate::remote::{JsonClient, RetryPolicy};
use crate::text::tokenize;

pub const EMBED_URL_ENV: &str = "GRAIL_EMBED_URL";

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vector>;

    /// Embeds every text; element `i` equals `embed(texts[i])`.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        check_batch(texts)?;
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

fn check_batch(texts: &[String]) -> Result<()> {
    match texts.iter().position(|t| t.trim().is_empty()) {
        Some(i) => Err(Error::EmptyText(i)),
        None => Ok(()),
    }
}

/// Deterministic feature-hashing embedder. A pure function of
/// `(seed, dim, text)` on every platform.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    seed: u64,
    dim: usize,
}

impl HashEmbedder {
    pub fn new(seed: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dim must be positive"));
        }
        Ok(HashEmbedder { seed, dim })
    }

    fn feature(&self, kind: u8, parts: &[&str], acc: &mut [f64]) {
        let mut h = FNV_OFFSET ^ splitmix64(self.seed);
        h = fnv1a(h, &[kind]);
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                h = fnv1a(h, &[0x1f]);
            }
            h = fnv1a(h, p.as_bytes());
        }
        let h = splitmix64(h);
        let bucket = ((u128::from(h) * self.dim as u128) >> 64) as usize;
        acc[bucket] += if h & 1 == 0 { 1.0 } else { -1.0 };
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vector> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::input("cannot embed empty text"));
        }
        let tokens = tokenize(trimmed);
        let mut acc = vec![0.0f64; self.dim];
        if tokens.is_empty() {
            self.feature(0, &[trimmed], &mut acc);
        }
        for t in &tokens {
            self.feature(1, &[t], &mut acc);
        }
        for pair in tokens.windows(2) {
            self.feature(2, &[&pair[0], &pair[1]], &mut acc);
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // All features cancelled out; fall back to the raw text feature.
            self.feature(0, &[trimmed], &mut acc);
            return Vector::normalize(&acc.iter().map(|&x| x as f32).collect::<Vec<_>>(), self.dim);
        }
        Ok(Vector::from_unit(acc.iter().map(|&x| (x / norm) as f32).collect()))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        check_batch(texts)?;
        texts.par_iter().map(|t| self.embed(t)).collect()
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Client for `POST {endpoint}/embed`.
pub struct HttpEmbedder {
    client: JsonClient,
    dim: usize,
    batch_size: usize,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, dim: usize, batch_size: usize, max_in_flight: usize) -> Result<Self> {
        if dim == 0 || batch_size == 0 {
            return Err(Error::config("dim and batch_size must be positive"));
        }
        Ok(HttpEmbedder {
            client: JsonClient::new(endpoint, Duration::from_secs(10), max_in_flight, RetryPolicy::DEFAULT),
            dim,
            batch_size,
        })
    }

    fn call(&self, texts: &[String]) -> Result<Vec<Vector>> {
        let resp: EmbedResponse = self.client.post("embed", &EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Provider {
                attempts: 1,
                message: format!("expected {} vectors, got {}", texts.len(), resp.vectors.len()),
            });
        }
        resp.vectors.iter().map(|raw| Vector::normalize(raw, self.dim)).collect()
    }
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vector> {
        if text.trim().is_empty() {
            return Err(Error::input("cannot embed empty text"));
        }
        let mut v = self.call(&[text.to_string()])?;
        Ok(v.remove(0))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>> {
        check_batch(texts)?;
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            out.extend(self.call(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Deterministic,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_batch_size() -> usize {
    32
}

fn default_in_flight() -> usize {
    4
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::deterministic(0, DEFAULT_DIM)
    }
}

impl EmbedderSpec {
    pub fn deterministic(seed: u64, dim: usize) -> Self {
        EmbedderSpec {
            kind: EmbedderKind::Deterministic,
            dim,
            seed,
            endpoint_url: None,
            batch_size: default_batch_size(),
            max_in_flight: default_in_flight(),
        }
    }

    pub fn external(endpoint_url: impl Into<String>, dim: usize) -> Self {
        EmbedderSpec {
            kind: EmbedderKind::External,
            endpoint_url: Some(endpoint_url.into()),
            ..EmbedderSpec::deterministic(0, dim)
        }
    }

    /// External when `GRAIL_EMBED_URL` is set, deterministic otherwise.
    pub fn from_env(seed: u64, dim: usize) -> Self {
        match std::env::var(EMBED_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => EmbedderSpec::external(url, dim),
            _ => EmbedderSpec::deterministic(seed, dim),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Embedder>> {
        match self.kind {
            EmbedderKind::Deterministic => Ok(Arc::new(HashEmbedder::new(self.seed, self.dim)?)),
            EmbedderKind::External => {
                let url = self
                    .endpoint_url
                    .as_deref()
                    .ok_or_else(|| Error::config("external embedder requires endpoint_url"))?;
                Ok(Arc::new(HttpEmbedder::new(url, self.dim, self.batch_size, self.max_in_flight)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn embedder() -> HashEmbedder {
        HashEmbedder::new(7, 384).unwrap()
    }

    fn random_text(rng: &mut ChaCha8Rng, words: usize) -> String {
        (0..words)
            .map(|_| {
                let len = rng.random_range(3..9);
                (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect::<String>()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn deterministic_and_self_similar() {
        let e = embedder();
        let a = e.embed("plot a chart").unwrap();
        let b = e.embed("plot a chart").unwrap();
        assert_eq!(a, b);
        assert!((a.dot(&b) - 1.0).abs() < 1e-6);
        // A fresh instance with the same parameters agrees bit for bit.
        assert_eq!(HashEmbedder::new(7, 384).unwrap().embed("plot a chart").unwrap(), a);
        assert_ne!(HashEmbedder::new(8, 384).unwrap().embed("plot a chart").unwrap(), a);
    }

    #[test]
    fn rejects_empty_text() {
        let e = embedder();
        assert!(matches!(e.embed("   "), Err(Error::Input(_))));
        let batch = vec!["ok".to_string(), " ".to_string()];
        assert!(matches!(e.embed_batch(&batch), Err(Error::EmptyText(1))));
    }

    #[test]
    fn punctuation_only_text_still_embeds() {
        let v = embedder().embed("!!!").unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn random_strings_are_unit_and_bounded() {
        let e = embedder();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let texts: Vec<String> = (0..100).map(|_| random_text(&mut rng, 6)).collect();
        let vs = e.embed_batch(&texts).unwrap();
        for v in &vs {
            assert!((v.norm() - 1.0).abs() < 1e-5);
        }
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let c = vs[i].dot(&vs[j]);
                assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&c));
            }
        }
    }

    #[test]
    fn batch_matches_scalar_loop() {
        let e = embedder();
        assert!(e.embed_batch(&[]).unwrap().is_empty());
        let ab = e.embed_batch(&["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(ab, vec![e.embed("a").unwrap(), e.embed("b").unwrap()]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let texts: Vec<String> = (0..1000).map(|_| random_text(&mut rng, 4)).collect();
        let batch = e.embed_batch(&texts).unwrap();
        assert_eq!(batch.len(), 1000);
        for (t, v) in texts.iter().zip(&batch) {
            assert_eq!(&e.embed(t).unwrap(), v);
        }
    }

    #[test]
    fn shared_ngrams_beat_disjoint_tokens() {
        // Pairs sharing more than 80% of their n-grams versus pairs with
        // disjoint vocabularies, on a seeded sample of 200 of each.
        let e = embedder();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst_similar = f64::INFINITY;
        let mut best_disjoint = f64::NEG_INFINITY;
        for _ in 0..200 {
            let base = random_text(&mut rng, 12);
            // Appending one token to 12 keeps 23 of 25 n-grams shared.
            let near = format!("{base} {}", random_text(&mut rng, 1));
            let other = random_text(&mut rng, 12);
            let s = e.embed(&base).unwrap().dot(&e.embed(&near).unwrap());
            let d = e.embed(&base).unwrap().dot(&e.embed(&other).unwrap());
            worst_similar = worst_similar.min(s);
            best_disjoint = best_disjoint.max(d);
        }
        assert!(worst_similar > best_disjoint, "{worst_similar} vs {best_disjoint}");
    }

    #[test]
    fn spec_builds_providers() {
        let spec = EmbedderSpec::deterministic(1, 64);
        assert_eq!(spec.build().unwrap().dim(), 64);
        let bad = EmbedderSpec { endpoint_url: None, ..EmbedderSpec::external("x", 64) };
        assert!(bad.build().is_err());
    }
}
