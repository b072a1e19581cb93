use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::fxp::QFormat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FxpError {
    #[error("invalid fixed-point format: {total_bits} total bits, {frac_bits} fractional, signed={signed}")]
    InvalidFormat {
        total_bits: u32,
        frac_bits: u32,
        signed: bool,
    },
    #[error("accumulator alignment mismatch: expected {expected} fractional bits, found {found}")]
    Alignment { expected: u32, found: u32 },
    #[error("format mismatch: {left} vs {right}")]
    FormatMismatch { left: QFormat, right: QFormat },
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid weight mask: {0}")]
    Mask(String),
    #[error(transparent)]
    Fxp(#[from] FxpError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoiseError {
    #[error("LFSR register must be nonzero")]
    ZeroState,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad magic {found:#010x} (expected {expected:#010x})")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated payload ({needed} bytes needed, {available} available)")]
    Truncated {
        path: PathBuf,
        needed: usize,
        available: usize,
    },
    #[error("image/label count mismatch: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("trainer state does not match: {0}")]
    StateMismatch(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HwError {
    #[error("invalid hardware parameters: {0}")]
    Params(String),
    #[error("inference arrivals must be sorted (index {0})")]
    Unsorted(usize),
}
