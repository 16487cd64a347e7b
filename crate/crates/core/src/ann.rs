//! Optional inverted-file (IVF) layer over the context matrix: spherical
//! k-means cells, and a search that only scores rows in the `nprobe` cells
//! nearest to the query. Each row is also listed in its `spill - 1`
//! runner-up cells, which recovers neighbours sitting near cell borders.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvfConfig {
    pub nlist: usize,
    pub nprobe: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Number of cells each row is listed in.
    pub spill: usize,
}

impl Default for IvfConfig {
    fn default() -> Self {
        IvfConfig { nlist: 64, nprobe: 20, iterations: 20, seed: 0, spill: 3 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IvfLayer {
    dim: usize,
    centroids: Vec<f32>,
    lists: Vec<Vec<u32>>,
    nprobe: usize,
}

fn nearest(centroids: &[f32], dim: usize, row: &[f32]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, centroid) in centroids.chunks(dim).enumerate() {
        let s = dot(centroid, row);
        if s > best.1 {
            best = (c, s);
        }
    }
    best.0
}

/// Indices of the `n` centroids with the highest dot product, best first.
fn nearest_cells(centroids: &[f32], dim: usize, row: &[f32], n: usize) -> Vec<usize> {
    let mut cells: Vec<(usize, f64)> =
        centroids.chunks(dim).enumerate().map(|(c, centroid)| (c, dot(centroid, row))).collect();
    cells.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cells.into_iter().take(n).map(|(c, _)| c).collect()
}

impl IvfLayer {
    pub(crate) fn build(data: &[f32], dim: usize, config: IvfConfig) -> Result<Self> {
        if config.nlist == 0 || config.nprobe == 0 || config.spill == 0 {
            return Err(Error::config("nlist, nprobe and spill must be positive"));
        }
        let n = data.len() / dim;
        let nlist = config.nlist.min(n.max(1));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

        let mut centroids: Vec<f32> = Vec::with_capacity(nlist * dim);
        for &r in order.iter().take(nlist) {
            centroids.extend_from_slice(&data[r * dim..(r + 1) * dim]);
        }
        if centroids.is_empty() {
            centroids = vec![0.0; dim];
        }
        let mut assign = vec![0usize; n];
        for _ in 0..config.iterations.max(1) {
            for (r, a) in assign.iter_mut().enumerate() {
                *a = nearest(&centroids, dim, &data[r * dim..(r + 1) * dim]);
            }
            let mut sums = vec![0.0f64; centroids.len()];
            for (r, &c) in assign.iter().enumerate() {
                for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(&data[r * dim..(r + 1) * dim]) {
                    *s += f64::from(x);
                }
            }
            for (c, sum) in sums.chunks(dim).enumerate() {
                let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
                // Empty cells keep their previous centroid.
                if norm > 0.0 {
                    for (dst, &s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(sum) {
                        *dst = (s / norm) as f32;
                    }
                }
            }
        }
        let mut lists = vec![Vec::new(); centroids.len() / dim];
        for r in 0..n {
            for c in nearest_cells(&centroids, dim, &data[r * dim..(r + 1) * dim], config.spill) {
                lists[c].push(r as u32);
            }
        }
        Ok(IvfLayer { dim, centroids, lists, nprobe: config.nprobe })
    }

    /// Distinct rows in the `nprobe` cells closest to `q`, ascending.
    pub(crate) fn candidates(&self, q: &[f32]) -> Vec<u32> {
        let mut rows: Vec<u32> = nearest_cells(&self.centroids, self.dim, q, self.nprobe)
            .into_iter()
            .flat_map(|c| self.lists[c].iter().copied())
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}
