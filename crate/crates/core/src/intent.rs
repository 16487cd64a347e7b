//! Intent index: per-agent matrices of usage-example embeddings, stored
//! contiguously with an offset table, and the example-level similarity
//! operators used for re-ranking.

use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::model::{dot, AgentCard, Vector};

/// Borrowed `m × dim` row-major matrix of unit example vectors.
#[derive(Debug, Clone, Copy)]
pub struct ExampleMatrix<'a> {
    data: &'a [f32],
    dim: usize,
}

impl<'a> ExampleMatrix<'a> {
    pub fn new(data: &'a [f32], dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Dimension { expected: dim, actual: data.len() });
        }
        Ok(ExampleMatrix { data, dim })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, j: usize) -> &'a [f32] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::Chunks<'a, f32> {
        self.data.chunks(self.dim)
    }

    fn check(&self, q: &Vector) -> Result<()> {
        if q.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: q.dim() });
        }
        Ok(())
    }

    pub(crate) fn max_sim_unchecked(&self, q: &[f32]) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.iter_rows().map(|row| dot(row, q)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn mean_row(&self) -> Vec<f64> {
        let mut mean = vec![0.0f64; self.dim];
        for row in self.iter_rows() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += f64::from(x);
            }
        }
        let m = self.rows() as f64;
        mean.iter_mut().for_each(|x| *x /= m);
        mean
    }

    pub(crate) fn mean_pool_unchecked(&self, q: &[f32]) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mean = self.mean_row();
        let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        mean.iter().zip(q).map(|(m, &x)| m * f64::from(x)).sum::<f64>() / norm
    }

    pub(crate) fn mean_pool_raw_unchecked(&self, q: &[f32]) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.mean_row().iter().zip(q).map(|(m, &x)| m * f64::from(x)).sum()
    }
}

/// Highest dot product between `q` and any row; 0.0 for an empty matrix.
/// Rows and query are unit vectors, so this is the maximum cosine.
pub fn max_sim(q: &Vector, m: &ExampleMatrix<'_>) -> Result<f64> {
    m.check(q)?;
    Ok(m.max_sim_unchecked(q.as_slice()))
}

/// Cosine between `q` and the re-normalized mean of the rows; 0.0 for an
/// empty matrix.
pub fn mean_pool_sim(q: &Vector, m: &ExampleMatrix<'_>) -> Result<f64> {
    m.check(q)?;
    Ok(m.mean_pool_unchecked(q.as_slice()))
}

/// Dot product between `q` and the plain (unnormalized) mean of the rows.
pub fn mean_pool_raw_dot(q: &Vector, m: &ExampleMatrix<'_>) -> Result<f64> {
    m.check(q)?;
    Ok(m.mean_pool_raw_unchecked(q.as_slice()))
}

#[derive(Debug, Clone)]
pub struct IntentIndex {
    dim: usize,
    /// Row range of agent `i` is `offsets[i]..offsets[i + 1]`.
    offsets: Vec<usize>,
    data: Vec<f32>,
}

impl IntentIndex {
    pub fn build(agents: &[AgentCard], embedder: &dyn Embedder, dim: usize) -> Result<Self> {
        if embedder.dim() != dim {
            return Err(Error::Build(format!("embedder dim {} does not match configured dim {dim}", embedder.dim())));
        }
        let mut offsets = Vec::with_capacity(agents.len() + 1);
        offsets.push(0);
        let mut texts = Vec::new();
        for a in agents {
            texts.extend(a.examples.iter().cloned());
            offsets.push(texts.len());
        }
        let vectors = embedder.embed_batch(&texts)?;
        let mut data = Vec::with_capacity(texts.len() * dim);
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::Build(format!("example vector dim {} does not match {dim}", v.dim())));
            }
            data.extend_from_slice(v.as_slice());
        }
        Ok(IntentIndex { dim, offsets, data })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn matrix(&self, agent_row: usize) -> ExampleMatrix<'_> {
        let (lo, hi) = (self.offsets[agent_row], self.offsets[agent_row + 1]);
        ExampleMatrix { data: &self.data[lo * self.dim..hi * self.dim], dim: self.dim }
    }
}
