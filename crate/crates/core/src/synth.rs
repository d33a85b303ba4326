//! Synthetic datasets with known structure.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::geometry::{Dataset, SeedSpec};

/// Equal-weight isotropic Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub centers: Vec<Vec<f64>>,
    pub std: f64,
}

impl GaussianMixture {
    pub fn new(centers: Vec<Vec<f64>>, std: f64) -> Result<Self> {
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(invalid("centers", "need at least one center, all of equal dimension"));
        }
        if !(std > 0.0 && std.is_finite()) {
            return Err(invalid("std", format!("must be positive, got {std}")));
        }
        Ok(Self { centers, std })
    }

    /// `k` centers spread along the diagonal of `R^dim`, `spacing` apart.
    pub fn diagonal(k: usize, dim: usize, spacing: f64, std: f64) -> Result<Self> {
        let step = spacing / (dim as f64).sqrt();
        let centers = (0..k).map(|c| vec![c as f64 * step; dim]).collect();
        Self::new(centers, std)
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// `n` points, component of point `i` chosen uniformly at random; the
    /// component index is stored as the label.
    pub fn sample(&self, n: usize, seed: SeedSpec) -> Result<Dataset> {
        let mut rng = seed.rng("mixture", 0);
        let dim = self.dim();
        let mut flat = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let c = rng.random_range(0..self.centers.len());
            labels.push(c as i64);
            for &m in &self.centers[c] {
                let z: f64 = rng.sample(StandardNormal);
                flat.push(m + self.std * z);
            }
        }
        Dataset::from_flat(flat, dim)?.with_labels(labels)
    }
}

/// Two planar blobs of `per_blob` points, Gaussian with scale `h` truncated
/// at radius `2h`, centred at `(0, 0)` and `(8h, 0)`. The strip between them
/// is empty and `4h` wide. Labels are 0 and 1.
pub fn separated_blobs(per_blob: usize, h: f64, seed: SeedSpec) -> Result<Dataset> {
    let mut rng = seed.rng("blobs", 0);
    let mut flat = Vec::with_capacity(per_blob * 4);
    let mut labels = Vec::with_capacity(per_blob * 2);
    for (label, cx) in [(0i64, 0.0), (1, 8.0 * h)] {
        let mut made = 0;
        while made < per_blob {
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * h;
            let y: f64 = rng.sample::<f64, _>(StandardNormal) * h;
            if x * x + y * y <= 4.0 * h * h {
                flat.extend_from_slice(&[cx + x, y]);
                labels.push(label);
                made += 1;
            }
        }
    }
    Dataset::from_flat(flat, 2)?.with_labels(labels)
}
