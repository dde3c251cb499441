//! Seeded Gaussian blob fixtures with known ground-truth classes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calibrate::LabeledDataset;
use crate::embedspace::EmbeddingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub points: usize,
    pub blobs: usize,
    pub dim: usize,
    /// Distance of each center from the origin. Centers are the vertices of a
    /// regular simplex, so distinct centers have cosine -1/(blobs-1).
    pub center_norm: f64,
    /// Per-coordinate standard deviation of the isotropic noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            points: 300,
            blobs: 3,
            dim: 16,
            center_norm: 10.0,
            noise_std: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Blobs {
    pub items: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    /// Blob index per point.
    pub classes: Vec<usize>,
}

impl Blobs {
    pub fn embeddings(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.items.clone(), &self.vectors)
    }

    pub fn labels(&self) -> LabeledDataset {
        LabeledDataset::new(
            self.items.clone(),
            self.classes.iter().map(|c| format!("blob{c}")).collect(),
        )
        .expect("generated identifiers are unique")
    }
}

/// Points are dealt to blobs round-robin, so blob sizes differ by at most one.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Blobs> {
    if spec.blobs == 0 || spec.blobs > spec.dim {
        return Err(Error::InvalidInput(format!(
            "need 1 <= blobs <= dim, got {} blobs in {} dimensions",
            spec.blobs, spec.dim
        )));
    }
    if spec.points == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| Error::InvalidInput(format!("noise: {e}")))?;
    let centers = simplex_centers(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.points.to_string().len();
    let mut items = Vec::with_capacity(spec.points);
    let mut vectors = Vec::with_capacity(spec.points);
    let mut classes = Vec::with_capacity(spec.points);
    for i in 0..spec.points {
        let class = i % spec.blobs;
        let mut v: Vec<f64> = (0..spec.dim).map(|_| noise.sample(&mut rng)).collect();
        for (x, c) in v.iter_mut().zip(&centers[class]) {
            *x += c;
        }
        items.push(format!("p{i:0width$}"));
        vectors.push(v);
        classes.push(class);
    }
    Ok(Blobs {
        items,
        vectors,
        classes,
    })
}

/// Axis vectors minus their centroid, rescaled to `center_norm`.
fn simplex_centers(spec: &BlobSpec) -> Vec<Vec<f64>> {
    let k = spec.blobs as f64;
    if spec.blobs == 1 {
        let mut c = vec![0.0; spec.dim];
        c[0] = spec.center_norm;
        return vec![c];
    }
    let scale = spec.center_norm / (1.0 - 1.0 / k).sqrt();
    (0..spec.blobs)
        .map(|class| {
            (0..spec.dim)
                .map(|d| match d {
                    d if d == class => scale * (1.0 - 1.0 / k),
                    d if d < spec.blobs => -scale / k,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}
