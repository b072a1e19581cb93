//! Trainer state container.
//!
//! All integers little-endian:
//!
//! ```text
//! magic          8   "FPESTRST"
//! version        u16 1
//! reserved       u16 0
//! population     u32
//! iterations     u32
//! sigma          f64
//! alpha          f64
//! seed           u64
//! precision      u8   0 = float32, 1 = fixed
//! total_bits     u8   (0 for float32)
//! frac_bits      u8
//! loss_quant     u8   0 = exact, 1 = po2
//! noise          u8   0 = counter, 1 = LFSR uniform, 2 = LFSR clt_sum
//! sampling       u8   0 = independent, 1 = mirrored
//! rounding       u8   0 = nearest, 1 = stochastic
//! reserved       u8
//! mask layer     u32
//! mask kind      u8   0 = all entries, 1 = explicit
//! if explicit:   count u32, then count x u32 entry indices
//! t              u32  completed iterations
//! forward_passes u64
//! weight count   u32, then i32 mantissas or f32 bits
//! history count  u32, then per iteration: mean reward f64, forward passes u64
//! crc32          u32  CRC-32 (IEEE) of every preceding byte
//! ```

use crate::codec::{check_header, Reader, Writer};
use crate::error::{CheckpointError, TrainError};
use crate::fxp::QFormat;
use crate::noise::LfsrMode;
use crate::qnet::{Precision, Selector, WeightMask};

use super::{LossQuantization, NoiseSource, Sampling, TrainConfig, UpdateRounding, Weights};

pub const STATE_MAGIC: &[u8; 8] = b"FPESTRST";
pub const STATE_VERSION: u16 = 1;

/// One completed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Mean reward over the population.
    pub mean_reward: f64,
    /// Forward passes spent in this iteration.
    pub forward_passes: u64,
}

/// Everything needed to continue a run between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub(crate) config: TrainConfig,
    pub(crate) t: usize,
    pub(crate) weights: Weights,
    pub(crate) forward_passes: u64,
    pub(crate) history: Vec<IterationRecord>,
}

impl TrainerState {
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn forward_passes(&self) -> u64 {
        self.forward_passes
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn encode(&self) -> Vec<u8> {
        let c = &self.config;
        let mut w = Writer::new();
        w.bytes(STATE_MAGIC);
        w.u16(STATE_VERSION);
        w.u16(0);
        w.u32(c.population as u32);
        w.u32(c.iterations as u32);
        w.f64(c.sigma);
        w.f64(c.alpha);
        w.u64(c.seed);
        match c.precision {
            Precision::Float32 => w.bytes(&[0, 0, 0]),
            Precision::Fixed(f) => w.bytes(&[1, f.total_bits() as u8, f.frac_bits() as u8]),
        }
        w.u8(match c.loss_quantization {
            LossQuantization::Exact => 0,
            LossQuantization::Po2 => 1,
        });
        w.u8(match c.noise {
            NoiseSource::Counter => 0,
            NoiseSource::Lfsr(LfsrMode::Uniform) => 1,
            NoiseSource::Lfsr(LfsrMode::CltSum) => 2,
        });
        w.u8(match c.sampling {
            Sampling::Independent => 0,
            Sampling::Mirrored => 1,
        });
        w.u8(match c.update_rounding {
            UpdateRounding::Nearest => 0,
            UpdateRounding::Stochastic => 1,
        });
        w.u8(0);
        w.u32(c.mask.layer_index as u32);
        match &c.mask.selector {
            Selector::All => w.u8(0),
            Selector::Explicit(ix) => {
                w.u8(1);
                w.u32(ix.len() as u32);
                ix.iter().for_each(|&k| w.u32(k));
            }
        }
        w.u32(self.t as u32);
        w.u64(self.forward_passes);
        match &self.weights {
            Weights::Float(v) => {
                w.u32(v.len() as u32);
                v.iter().for_each(|&x| w.f32(x));
            }
            Weights::Fixed { mantissas, .. } => {
                w.u32(mantissas.len() as u32);
                mantissas.iter().for_each(|&m| w.i32(m));
            }
        }
        w.u32(self.history.len() as u32);
        for r in &self.history {
            w.f64(r.mean_reward);
            w.u64(r.forward_passes);
        }
        w.finish()
    }

    /// Decodes a blob. `workers` is not part of the state and is taken
    /// from the argument.
    pub fn decode(bytes: &[u8], workers: usize) -> Result<Self, TrainError> {
        let mut r = Reader::new(bytes);
        check_header(&mut r, STATE_MAGIC, STATE_VERSION)?;
        r.u16("reserved")?;
        let population = r.u32("population")? as usize;
        let iterations = r.u32("iterations")? as usize;
        let sigma = r.f64("sigma")?;
        let alpha = r.f64("alpha")?;
        let seed = r.u64("seed")?;
        let (ptag, total, frac) = (r.u8("precision")?, r.u8("total_bits")?, r.u8("frac_bits")?);
        let precision = match ptag {
            0 => Precision::Float32,
            1 => Precision::Fixed(
                QFormat::signed(u32::from(total), u32::from(frac)).map_err(|e| malformed(e.to_string()))?,
            ),
            t => return Err(malformed(format!("precision tag {t}"))),
        };
        let loss_quantization = match r.u8("loss quantization")? {
            0 => LossQuantization::Exact,
            1 => LossQuantization::Po2,
            t => return Err(malformed(format!("loss quantization tag {t}"))),
        };
        let noise = match r.u8("noise")? {
            0 => NoiseSource::Counter,
            1 => NoiseSource::Lfsr(LfsrMode::Uniform),
            2 => NoiseSource::Lfsr(LfsrMode::CltSum),
            t => return Err(malformed(format!("noise tag {t}"))),
        };
        let sampling = match r.u8("sampling")? {
            0 => Sampling::Independent,
            1 => Sampling::Mirrored,
            t => return Err(malformed(format!("sampling tag {t}"))),
        };
        let update_rounding = match r.u8("rounding")? {
            0 => UpdateRounding::Nearest,
            1 => UpdateRounding::Stochastic,
            t => return Err(malformed(format!("rounding tag {t}"))),
        };
        r.take(1, "reserved")?;
        let layer_index = r.u32("mask layer")? as usize;
        let mask = match r.u8("mask kind")? {
            0 => WeightMask::layer(layer_index),
            1 => {
                let n = r.len(4, "mask indices")?;
                let ix = (0..n).map(|_| r.u32("mask index")).collect::<Result<Vec<_>, _>>()?;
                WeightMask {
                    layer_index,
                    selector: Selector::Explicit(ix),
                }
            }
            t => return Err(malformed(format!("mask kind {t}"))),
        };
        let t = r.u32("t")? as usize;
        let forward_passes = r.u64("forward passes")?;
        let nw = r.len(4, "weights")?;
        let weights = match precision {
            Precision::Float32 => Weights::Float((0..nw).map(|_| r.f32("weight")).collect::<Result<_, _>>()?),
            Precision::Fixed(fmt) => {
                let m: Vec<i32> = (0..nw).map(|_| r.i32("weight")).collect::<Result<_, _>>()?;
                if m.iter().any(|&x| i64::from(x) != fmt.saturate(i64::from(x))) {
                    return Err(malformed(format!("weight mantissa outside {fmt}")));
                }
                Weights::Fixed { fmt, mantissas: m }
            }
        };
        let nh = r.len(16, "history")?;
        let history = (0..nh)
            .map(|_| {
                Ok(IterationRecord {
                    mean_reward: r.f64("mean reward")?,
                    forward_passes: r.u64("history passes")?,
                })
            })
            .collect::<Result<Vec<_>, CheckpointError>>()?;
        r.finish()?;
        let config = TrainConfig {
            population,
            iterations,
            sigma,
            alpha,
            seed,
            mask,
            precision,
            loss_quantization,
            noise,
            sampling,
            update_rounding,
            workers,
        };
        config.validate()?;
        if t > iterations || history.len() != t {
            return Err(malformed(format!(
                "iteration {t} of {iterations} with {} history rows",
                history.len()
            )));
        }
        Ok(Self {
            config,
            t,
            weights,
            forward_passes,
            history,
        })
    }
}

fn malformed(m: String) -> TrainError {
    TrainError::Checkpoint(CheckpointError::Malformed(m))
}
