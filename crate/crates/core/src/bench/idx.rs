//! IDX (MNIST) file parsing.

use std::fs;
use std::path::Path;

use crate::error::DataError;

use super::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const MNIST_CLASSES: usize = 10;

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| DataError::Truncated {
            path: path.to_path_buf(),
            needed: at + 4,
            available: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<(), DataError> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

/// Parses an IDX3 image file into `(count, rows * cols, pixels)`.
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>), DataError> {
    check_magic(bytes, IMAGES_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let dim = rows * cols;
    let needed = 16 + n * dim;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            needed,
            available: bytes.len(),
        });
    }
    Ok((n, dim, bytes[16..needed].to_vec()))
}

/// Parses an IDX1 label file.
pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>, DataError> {
    check_magic(bytes, LABELS_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    let needed = 8 + n;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Loads an image/label file pair; pixels are scaled by `1/255`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (n, dim, pixels) = parse_images(&read(ip)?, ip)?;
    let labels = parse_labels(&read(lp)?, lp)?;
    if labels.len() != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    let features = pixels.iter().map(|&p| f32::from(p) / 255.0).collect();
    Dataset::new(dim, MNIST_CLASSES, features, labels)
}

/// Standard MNIST file names inside a directory: `(train, test)`.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset), DataError> {
    let d = dir.as_ref();
    let train = load_idx(d.join("train-images-idx3-ubyte"), d.join("train-labels-idx1-ubyte"))?;
    let test = load_idx(d.join("t10k-images-idx3-ubyte"), d.join("t10k-labels-idx1-ubyte"))?;
    Ok((train, test))
}

/// 28x28 images to 8x8: central 24x24 crop, then 3x3 average pooling.
pub fn pool_mnist(data: &Dataset) -> Result<Dataset, DataError> {
    if data.dim() != 784 {
        return Err(DataError::Invalid(format!("expected 28x28 images, got dimension {}", data.dim())));
    }
    let mut features = Vec::with_capacity(data.len() * 64);
    for (x, _) in data.samples() {
        for by in 0..8 {
            for bx in 0..8 {
                let mut s = 0f32;
                for dy in 0..3 {
                    for dx in 0..3 {
                        s += x[(2 + by * 3 + dy) * 28 + 2 + bx * 3 + dx];
                    }
                }
                features.push((s / 9.0).clamp(0.0, 1.0));
            }
        }
    }
    Dataset::new(64, data.num_classes(), features, data.labels().to_vec())
}
