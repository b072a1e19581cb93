use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DataError;
use crate::noise::NoiseStream;

/// Row-major feature matrix in `[0, 1]` with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    num_classes: usize,
    features: Vec<f32>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(
        dim: usize,
        num_classes: usize,
        features: Vec<f32>,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        if dim == 0 || num_classes == 0 || num_classes > 256 {
            return Err(DataError::Invalid(format!(
                "dim {dim}, classes {num_classes} out of range"
            )));
        }
        if labels.is_empty() {
            return Err(DataError::Invalid("dataset is empty".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(DataError::Invalid(format!(
                "{} features for {} samples of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(x) = features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(DataError::Invalid(format!("feature {x} outside [0, 1]")));
        }
        if let Some(&l) = labels.iter().find(|&&l| usize::from(l) >= num_classes) {
            return Err(DataError::Invalid(format!("label {l} >= {num_classes} classes")));
        }
        Ok(Self {
            dim,
            num_classes,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn sample(&self, k: usize) -> &[f32] {
        &self.features[k * self.dim..(k + 1) * self.dim]
    }

    pub fn label(&self, k: usize) -> usize {
        usize::from(self.labels[k])
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f32], usize)> {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().map(|&l| usize::from(l)))
    }

    /// Samples `range`, as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self, DataError> {
        if range.start >= range.end || range.end > self.len() {
            return Err(DataError::Invalid(format!(
                "slice {range:?} of {} samples",
                self.len()
            )));
        }
        Ok(Self {
            dim: self.dim,
            num_classes: self.num_classes,
            features: self.features[range.start * self.dim..range.end * self.dim].to_vec(),
            labels: self.labels[range].to_vec(),
        })
    }

    /// Samples in the given order.
    pub fn select(&self, order: &[usize]) -> Self {
        let mut features = Vec::with_capacity(order.len() * self.dim);
        for &k in order {
            features.extend_from_slice(self.sample(k));
        }
        Self {
            dim: self.dim,
            num_classes: self.num_classes,
            features,
            labels: order.iter().map(|&k| self.labels[k]).collect(),
        }
    }

    pub(crate) fn map_features(&self, f: impl Fn(usize, usize, f32) -> f32) -> Self {
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(n, &x)| f(n / self.dim, n % self.dim, x))
            .collect();
        Self {
            features,
            ..self.clone()
        }
    }

    /// Concatenates two datasets with matching shape.
    pub fn concat(&self, other: &Dataset) -> Result<Self, DataError> {
        if self.dim != other.dim || self.num_classes != other.num_classes {
            return Err(DataError::Invalid("shape mismatch in concat".into()));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }
}

/// First `n_train` samples and the remainder, optionally after a seeded
/// shuffle.
pub fn split(
    dataset: &Dataset,
    n_train: usize,
    shuffle_seed: Option<u64>,
) -> Result<(Dataset, Dataset), DataError> {
    if n_train == 0 || n_train >= dataset.len() {
        return Err(DataError::Invalid(format!(
            "n_train {n_train} must be in 1..{}",
            dataset.len()
        )));
    }
    let shuffled;
    let ds = match shuffle_seed {
        Some(seed) => {
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            shuffled = dataset.select(&order);
            &shuffled
        }
        None => dataset,
    };
    Ok((ds.slice(0..n_train)?, ds.slice(n_train..ds.len())?))
}

/// Adds `N(0, sigma^2)` to every feature and clamps to `[0, 1]`. Labels are
/// unchanged.
pub fn inject_noise(dataset: &Dataset, sigma: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(DataError::Invalid(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(dataset.clone());
    }
    let stream = NoiseStream::new(seed).derive(0x1a9e_c7ed);
    Ok(dataset.map_features(|k, d, x| {
        let n = sigma * stream.normal(0, k as u64, d as u64);
        (f64::from(x) + n).clamp(0.0, 1.0) as f32
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(m: usize) -> Dataset {
        let features = (0..m * 4).map(|k| (k % 11) as f32 / 10.0).collect();
        let labels = (0..m).map(|k| (k % 3) as u8).collect();
        Dataset::new(4, 3, features, labels).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Dataset::new(2, 2, vec![0.0, 1.5], vec![0]).is_err());
        assert!(Dataset::new(2, 2, vec![0.0, 1.0], vec![2]).is_err());
        assert!(Dataset::new(2, 2, vec![], vec![]).is_err());
        assert!(Dataset::new(2, 2, vec![0.0], vec![0]).is_err());
    }

    #[test]
    fn split_shapes_and_errors() {
        let d = ramp(60);
        let (a, b) = split(&d, 50, None).unwrap();
        assert_eq!((a.len(), b.len()), (50, 10));
        assert_eq!(a.sample(3), d.sample(3));
        assert!(split(&d, 60, None).is_err());
        assert!(split(&d, 0, None).is_err());
        let (s1, _) = split(&d, 50, Some(9)).unwrap();
        let (s2, _) = split(&d, 50, Some(9)).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1, a);
    }

    #[test]
    fn noise_zero_and_clamp() {
        let d = ramp(20);
        assert_eq!(inject_noise(&d, 0.0, 1).unwrap(), d);
        for sigma in [0.1, 0.5, 1.0, 5.0] {
            let n = inject_noise(&d, sigma, 3).unwrap();
            assert!(n.samples().all(|(x, _)| x.iter().all(|v| (0.0..=1.0).contains(v))));
            assert_eq!(n.labels(), d.labels());
            assert_eq!(n, inject_noise(&d, sigma, 3).unwrap());
        }
        assert!(inject_noise(&d, -0.1, 1).is_err());
    }
}
