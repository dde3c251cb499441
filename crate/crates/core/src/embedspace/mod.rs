//! Embedding matrices, pairwise cosine similarities and similarity-distribution
//! diagnostics.
//!
//! Rows are L2-normalized once at construction, so cosine similarity reduces to
//! a dot product. Similarities are accumulated in `f64` and stored as `f32` in a
//! flat upper triangle (see [`crate::triangle`]); the diagonal is implicit.

mod io;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::triangle;

pub(crate) use io::csv_error;
pub use io::{load_embeddings, manifest_path, write_csv, write_emb1, EmbeddingFormat};

/// `n x d` embedding matrix with unique item identifiers.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    items: Vec<String>,
    // row-major, each row unit length
    rows: Vec<f64>,
    dim: usize,
}

impl EmbeddingMatrix {
    /// Validates and normalizes the rows.
    ///
    /// Rejects empty input, ragged rows, non-finite entries, all-zero rows and
    /// duplicate identifiers.
    pub fn new(items: Vec<String>, vectors: &[Vec<f64>]) -> Result<Self> {
        if items.len() != vectors.len() {
            return Err(Error::LengthMismatch {
                expected: items.len(),
                actual: vectors.len(),
            });
        }
        if vectors.is_empty() {
            return Err(Error::InvalidInput("embedding matrix has no rows".into()));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension is zero".into()));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for (i, id) in items.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate identifier {id:?} at row {i}"
                )));
            }
        }
        let mut rows = Vec::with_capacity(vectors.len() * dim);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} features, expected {dim}",
                    v.len()
                )));
            }
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at row {i}, column {j}"
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!("row {i} is the zero vector")));
            }
            rows.extend(v.iter().map(|x| x / norm));
        }
        Ok(Self { items, rows, dim })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Unit-length row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

/// Symmetric matrix of raw cosine similarities with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    upper: Vec<f32>,
}

impl SimilarityMatrix {
    /// Builds a matrix from its strictly-upper triangle in storage order.
    pub fn from_upper(n: usize, upper: Vec<f32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("similarity matrix over zero items".into()));
        }
        if upper.len() != triangle::pair_count(n) {
            return Err(Error::LengthMismatch {
                expected: triangle::pair_count(n),
                actual: upper.len(),
            });
        }
        if let Some(v) = upper
            .iter()
            .find(|v| !v.is_finite() || v.abs() > 1.0 + 1e-6)
        {
            return Err(Error::InvalidInput(format!(
                "similarity {v} outside [-1, 1]"
            )));
        }
        Ok(Self { n, upper })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            f64::from(self.upper[triangle::pair_offset(self.n, i, j)])
        }
    }

    /// Off-diagonal values in storage order.
    pub fn upper(&self) -> &[f32] {
        &self.upper
    }
}

/// Pairwise cosine similarities of all rows, computed in parallel by row.
pub fn cosine_similarities(emb: &EmbeddingMatrix) -> SimilarityMatrix {
    let n = emb.len();
    let mut upper = vec![0f32; triangle::pair_count(n)];
    triangle::rows_mut(n, &mut upper)
        .into_par_iter()
        .for_each(|(i, out)| {
            let a = emb.row(i);
            for (slot, j) in out.iter_mut().zip(i + 1..n) {
                let dot: f64 = a.iter().zip(emb.row(j)).map(|(x, y)| x * y).sum();
                *slot = dot.clamp(-1.0, 1.0) as f32;
            }
        });
    SimilarityMatrix { n, upper }
}

/// Summary of the off-diagonal similarity distribution.
#[derive(Debug, Clone, Serialize)]
pub struct DistributionStats {
    pub pairs: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// Fixed-width bins covering [-1, 1].
    pub histogram: Vec<usize>,
}

impl DistributionStats {
    /// Lower edge of each histogram bin.
    pub fn bin_edges(&self) -> Vec<f64> {
        let w = 2.0 / self.histogram.len() as f64;
        (0..self.histogram.len()).map(|b| -1.0 + b as f64 * w).collect()
    }
}

/// Statistics over the `n(n-1)/2` distinct pairs; self-similarities are excluded.
pub fn distribution_stats(sim: &SimilarityMatrix, bins: usize) -> Result<DistributionStats> {
    if sim.len() < 2 {
        return Err(Error::InvalidInput(
            "distribution statistics need at least two items".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    let mut values: Vec<f64> = sim.upper.iter().map(|&v| f64::from(v)).collect();
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;

    let mut histogram = vec![0usize; bins];
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in &values {
        min = min.min(v);
        max = max.max(v);
        let b = (((v + 1.0) / 2.0) * bins as f64).floor();
        histogram[(b.max(0.0) as usize).min(bins - 1)] += 1;
    }

    let mid = count / 2;
    let (_, upper_mid, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper_mid = *upper_mid;
    let median = if count % 2 == 1 {
        upper_mid
    } else {
        let lower_mid = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lower_mid + upper_mid) / 2.0
    };

    Ok(DistributionStats {
        pairs: count,
        mean,
        std: var.sqrt(),
        min,
        max,
        median,
        histogram,
    })
}
