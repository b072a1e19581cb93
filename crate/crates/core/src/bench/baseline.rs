//! Floating-point baseline training and post-training quantization.
//!
//! The baseline exists only to produce a deployed model for the
//! retraining experiments; nothing in the ES path calls it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NetError, TrainError};
use crate::fxp::QFormat;
use crate::qnet::{Activation, DenseLayer, LayerParams, Model};

use super::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    /// Layer widths, input first. Hidden layers use ReLU, the output is
    /// linear.
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f32,
    pub batch_size: usize,
    pub seed: u64,
}

impl BaselineConfig {
    /// The desk-scale 64-32-16-10 network.
    pub fn desk() -> Self {
        Self {
            dims: vec![64, 32, 16, 10],
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 16,
            seed: 1,
        }
    }
}

struct Layer {
    n_in: usize,
    n_out: usize,
    w: Vec<f32>,
    b: Vec<f32>,
    relu: bool,
}

/// Mini-batch SGD on the squared error against one-hot targets.
pub fn train_baseline(data: &Dataset, cfg: &BaselineConfig) -> Result<Model, TrainError> {
    let dims = &cfg.dims;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(TrainError::Config(format!("bad architecture {dims:?}")));
    }
    if dims[0] != data.dim() || dims[dims.len() - 1] != data.num_classes() {
        return Err(TrainError::Config(format!(
            "architecture {dims:?} does not fit data ({} -> {})",
            data.dim(),
            data.num_classes()
        )));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate >= 0.0) {
        return Err(TrainError::Config("batch size must be >= 1 and learning rate >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut layers: Vec<Layer> = dims
        .windows(2)
        .enumerate()
        .map(|(k, d)| {
            let limit = (6.0 / d[0] as f32).sqrt();
            Layer {
                n_in: d[0],
                n_out: d[1],
                w: (0..d[0] * d[1]).map(|_| rng.gen_range(-limit..limit)).collect(),
                b: vec![0.0; d[1]],
                relu: k + 2 < dims.len(),
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut acts: Vec<Vec<f32>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut deltas: Vec<Vec<f32>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut gw: Vec<Vec<f32>> = layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
    let mut gb: Vec<Vec<f32>> = layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0f64;
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().chain(gb.iter_mut()).for_each(|g| g.fill(0.0));
            for &s in batch {
                acts[0].copy_from_slice(data.sample(s));
                for (k, l) in layers.iter().enumerate() {
                    let (lo, hi) = acts.split_at_mut(k + 1);
                    forward_layer(l, &lo[k], &mut hi[0]);
                }
                let out = &acts[dims.len() - 1];
                let y = data.label(s);
                let top = &mut deltas[dims.len() - 1];
                for (c, (d, &o)) in top.iter_mut().zip(out).enumerate() {
                    let e = o - if c == y { 1.0 } else { 0.0 };
                    epoch_loss += f64::from(e * e);
                    *d = e;
                }
                for k in (0..layers.len()).rev() {
                    let l = &layers[k];
                    let (dlo, dhi) = deltas.split_at_mut(k + 1);
                    let (d_out, d_in) = (&dhi[0], &mut dlo[k]);
                    let x = &acts[k];
                    for j in 0..l.n_out {
                        let dj = d_out[j];
                        gb[k][j] += dj;
                        let row = &mut gw[k][j * l.n_in..(j + 1) * l.n_in];
                        for (g, &xi) in row.iter_mut().zip(x) {
                            *g += dj * xi;
                        }
                    }
                    if k > 0 {
                        d_in.fill(0.0);
                        for j in 0..l.n_out {
                            let dj = d_out[j];
                            for (di, &w) in d_in.iter_mut().zip(&l.w[j * l.n_in..(j + 1) * l.n_in]) {
                                *di += dj * w;
                            }
                        }
                        if layers[k - 1].relu {
                            for (di, &a) in d_in.iter_mut().zip(x) {
                                if a <= 0.0 {
                                    *di = 0.0;
                                }
                            }
                        }
                    }
                }
            }
            let step = cfg.learning_rate / batch.len() as f32;
            for (k, l) in layers.iter_mut().enumerate() {
                l.w.iter_mut().zip(&gw[k]).for_each(|(w, g)| *w -= step * g);
                l.b.iter_mut().zip(&gb[k]).for_each(|(b, g)| *b -= step * g);
            }
        }
        if !epoch_loss.is_finite() {
            return Err(TrainError::Diverged(format!("baseline loss non-finite in epoch {epoch}")));
        }
    }
    let layers = layers
        .into_iter()
        .map(|l| {
            DenseLayer::new(
                l.n_in,
                l.n_out,
                if l.relu { Activation::Relu } else { Activation::None },
                0,
                LayerParams::Float { weights: l.w, bias: l.b },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Model::new(layers)?)
}

fn forward_layer(l: &Layer, x: &[f32], y: &mut [f32]) {
    for j in 0..l.n_out {
        let row = &l.w[j * l.n_in..(j + 1) * l.n_in];
        let mut s = l.b[j];
        for (w, xi) in row.iter().zip(x) {
            s += w * xi;
        }
        y[j] = if l.relu && s < 0.0 { 0.0 } else { s };
    }
}

/// Per-layer scale exponent: the smallest `e` such that `2^e` times the
/// format's integer range covers the largest parameter magnitude.
pub fn layer_scale_exp(max_abs: f64, fmt: QFormat) -> i32 {
    if !(max_abs > 0.0) {
        return 0;
    }
    let int_bits = fmt.total_bits() as i32 - i32::from(fmt.is_signed()) - fmt.frac_bits() as i32;
    let mut e = max_abs.log2().ceil() as i32 - int_bits;
    // guard against log2 rounding at exact powers of two
    while f64::from(e - 1).exp2() * f64::from(int_bits).exp2() >= max_abs {
        e -= 1;
    }
    while f64::from(e).exp2() * f64::from(int_bits).exp2() < max_abs {
        e += 1;
    }
    e
}

/// Post-training quantization of every layer to `fmt` with a per-layer
/// power-of-two scale. Biases share their layer's scale.
pub fn quantize_model(model: &Model, fmt: QFormat) -> Result<Model, NetError> {
    let layers = model
        .layers()
        .iter()
        .map(|l| {
            let n = l.param_count();
            let nw = l.in_dim() * l.out_dim();
            let scale = f64::from(l.scale_exp()).exp2();
            let real: Vec<f64> = (0..n).map(|k| l.entry(k) * scale).collect();
            let max = real.iter().fold(0f64, |m, x| m.max(x.abs()));
            let e = layer_scale_exp(max, fmt);
            let norm: Vec<f64> = real.iter().map(|x| x * f64::from(-e).exp2()).collect();
            DenseLayer::quantized(l.in_dim(), l.out_dim(), l.activation(), e, fmt, &norm[..nw], &norm[nw..])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut m = Model::new(layers)?;
    m.set_mask(model.mask().cloned())?;
    Ok(m)
}
