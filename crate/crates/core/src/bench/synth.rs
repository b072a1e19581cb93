//! Synthetic stand-in for MNIST when the IDX files are not available.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DataError;
use crate::noise::NoiseStream;

use super::{split, Dataset};

/// Shape of the generated class clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Number of shared sparse "stroke" patterns class centers are built from.
    pub strokes: usize,
    /// Strokes per class center.
    pub strokes_per_class: usize,
    /// Pixels per stroke.
    pub stroke_pixels: usize,
    /// Standard deviation of the per-pixel Gaussian spread around a center.
    pub spread: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            strokes: 16,
            strokes_per_class: 3,
            stroke_pixels: 8,
            spread: 0.2,
        }
    }
}

/// Gaussian clusters around sparse class centers in `[0, 1]^dim`, clamped.
/// Labels cycle through the classes, so counts differ by at most one.
pub fn generate_synthetic(num_classes: usize, dim: usize, m: usize, seed: u64) -> Result<Dataset, DataError> {
    generate_synthetic_with(num_classes, dim, m, seed, SyntheticParams::default())
}

/// Desk-scale stand-in for pooled MNIST: 10 classes, 64 features, 12,000
/// training and 4,000 validation samples.
pub fn synthetic_desk(seed: u64) -> Result<(Dataset, Dataset), DataError> {
    split(&generate_synthetic(10, 64, 16_000, seed)?, 12_000, None)
}

pub fn generate_synthetic_with(
    num_classes: usize,
    dim: usize,
    m: usize,
    seed: u64,
    params: SyntheticParams,
) -> Result<Dataset, DataError> {
    if num_classes == 0 || dim == 0 || m == 0 {
        return Err(DataError::Invalid("classes, dimension and count must be positive".into()));
    }
    if params.stroke_pixels == 0 || params.stroke_pixels > dim || params.strokes_per_class > params.strokes || params.strokes_per_class == 0 {
        return Err(DataError::Invalid(format!("inconsistent synthetic parameters {params:?}")));
    }
    if !(params.spread >= 0.0) {
        return Err(DataError::Invalid("spread must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strokes: Vec<Vec<usize>> = (0..params.strokes)
        .map(|_| sample(&mut rng, dim, params.stroke_pixels).into_vec())
        .collect();
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let mut c = vec![0f64; dim];
            for s in sample(&mut rng, params.strokes, params.strokes_per_class) {
                let level = rng.gen_range(0.6..1.0);
                for &p in &strokes[s] {
                    c[p] = (c[p] + level).min(1.0);
                }
            }
            c
        })
        .collect();
    let stream = NoiseStream::new(seed).derive(0x5e17_5e17);
    let mut features = Vec::with_capacity(m * dim);
    let mut labels = Vec::with_capacity(m);
    for k in 0..m {
        let c = k % num_classes;
        for (j, &mu) in centers[c].iter().enumerate() {
            let x = mu + params.spread * stream.normal(0, k as u64, j as u64);
            features.push(x.clamp(0.0, 1.0) as f32);
        }
        labels.push(c as u8);
    }
    Dataset::new(dim, num_classes, features, labels)
}
