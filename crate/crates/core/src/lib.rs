//! Forward-pass-only incremental training for quantized networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`fxp`]: saturating fixed-point scalars, power-of-two quantization and
//!   32-bit accumulators.
//! - [`noise`]: counter-based normal streams and the 8-bit LFSR generator.
//! - [`qnet`]: quantized dense networks, forward passes, perturbation views
//!   and the checkpoint format.
//! - [`estrain`]: evolutionary-strategy retraining of a masked weight subset.
//! - [`bench`]: datasets, baseline training and the noise-recovery experiment.
//! - [`hwcost`]: training-time, area and inference-interleaving models.
//! - [`cli`]: the `fpes` command-line front end.

mod codec;
pub mod error;
pub mod fxp;
pub mod noise;
pub mod qnet;
pub mod estrain;
pub mod bench;
pub mod hwcost;
pub mod cli;

pub use error::{CheckpointError, DataError, FxpError, HwError, NetError, NoiseError, TrainError};
