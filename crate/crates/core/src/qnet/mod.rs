//! Quantized fully-connected networks.
//!
//! Layer parameters are stored in a normalized domain: the real weight is the
//! stored value times `2^scale_exp` of its layer. Fixed-point layers keep raw
//! mantissas plus one [`QFormat`]; a layer retrained on the floating-point
//! reference path carries `f32` values instead.

pub mod checkpoint;
mod forward;

use std::fmt;

use crate::error::NetError;
use crate::fxp::{quantize, shift_mul, po2_quantize, Fixed, QFormat};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{dense_forward, model_forward, FixedPlan, FloatPlan, Plan, PlanOutput, PreparedInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    None,
    Relu,
}

/// Numeric mode of a forward pass (and of ES training).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    /// 32-bit floating-point reference path.
    Float32,
    /// Fixed-point datapath; the format is signed and sets both the update
    /// format of trained weights and the activation width.
    Fixed(QFormat),
}

impl Precision {
    pub fn fixed(total_bits: u32, frac_bits: u32) -> Result<Self, NetError> {
        Ok(Self::Fixed(QFormat::signed(total_bits, frac_bits)?))
    }

    /// Default fixed-point split for a given width.
    pub fn default_fixed(total_bits: u32) -> Result<Self, NetError> {
        let frac = match total_bits {
            0..=7 => total_bits.saturating_sub(2),
            8..=12 => total_bits - 4,
            13..=16 => total_bits - 4,
            _ => total_bits - 8,
        };
        Self::fixed(total_bits, frac)
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Float32 => 32,
            Precision::Fixed(f) => f.total_bits(),
        }
    }

    pub fn label(self) -> String {
        match self {
            Precision::Float32 => "float32".to_string(),
            Precision::Fixed(f) => format!("fixed{}.{}", f.total_bits(), f.frac_bits()),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Fixed {
        fmt: QFormat,
        weights: Vec<i32>,
        bias: Vec<i32>,
    },
    Float {
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
}

impl LayerParams {
    fn lens(&self) -> (usize, usize) {
        match self {
            LayerParams::Fixed { weights, bias, .. } => (weights.len(), bias.len()),
            LayerParams::Float { weights, bias } => (weights.len(), bias.len()),
        }
    }
}

/// One dense layer, `out = act(2^scale_exp * (W x + b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    scale_exp: i32,
    params: LayerParams,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        scale_exp: i32,
        params: LayerParams,
    ) -> Result<Self, NetError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NetError::Invalid("layer dimensions must be positive".into()));
        }
        let (w, b) = params.lens();
        if w != in_dim * out_dim {
            return Err(NetError::Dimension {
                what: "weights",
                expected: in_dim * out_dim,
                got: w,
            });
        }
        if b != out_dim {
            return Err(NetError::Dimension {
                what: "bias",
                expected: out_dim,
                got: b,
            });
        }
        if let LayerParams::Fixed { fmt, .. } = &params {
            if !fmt.fits_i32() {
                return Err(NetError::Invalid(format!("weight format {fmt} exceeds 32 bits")));
            }
        }
        if let LayerParams::Fixed { fmt, weights, bias } = &params {
            let (lo, hi) = (fmt.min_mantissa(), fmt.max_mantissa());
            if weights
                .iter()
                .chain(bias)
                .any(|&m| i64::from(m) < lo || i64::from(m) > hi)
            {
                return Err(NetError::Invalid(format!("mantissa outside {fmt}")));
            }
        }
        Ok(Self {
            in_dim,
            out_dim,
            activation,
            scale_exp,
            params,
        })
    }

    /// Quantizes real-valued (already scale-normalized) parameters.
    pub fn quantized(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        scale_exp: i32,
        fmt: QFormat,
        weights: &[f64],
        bias: &[f64],
    ) -> Result<Self, NetError> {
        let q = |v: &[f64]| -> Vec<i32> { v.iter().map(|&x| quantize(x, fmt).mantissa() as i32).collect() };
        Self::new(
            in_dim,
            out_dim,
            activation,
            scale_exp,
            LayerParams::Fixed {
                fmt,
                weights: q(weights),
                bias: q(bias),
            },
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    pub fn params(&self) -> &LayerParams {
        &self.params
    }

    /// Weight format, or `None` for a floating-point layer.
    pub fn format(&self) -> Option<QFormat> {
        match &self.params {
            LayerParams::Fixed { fmt, .. } => Some(*fmt),
            LayerParams::Float { .. } => None,
        }
    }

    /// Weights plus biases.
    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }

    /// Normalized value of entry `idx` (weights row-major, then biases).
    pub fn entry(&self, idx: usize) -> f64 {
        let nw = self.in_dim * self.out_dim;
        match &self.params {
            LayerParams::Fixed { fmt, weights, bias } => {
                let m = if idx < nw { weights[idx] } else { bias[idx - nw] };
                f64::from(m) * fmt.step()
            }
            LayerParams::Float { weights, bias } => {
                f64::from(if idx < nw { weights[idx] } else { bias[idx - nw] })
            }
        }
    }

    /// Fixed-point view of entry `idx`; `None` on a floating-point layer.
    pub fn entry_fixed(&self, idx: usize) -> Option<Fixed> {
        let nw = self.in_dim * self.out_dim;
        match &self.params {
            LayerParams::Fixed { fmt, weights, bias } => {
                let m = if idx < nw { weights[idx] } else { bias[idx - nw] };
                Some(Fixed::from_mantissa(i64::from(m), *fmt))
            }
            LayerParams::Float { .. } => None,
        }
    }

    /// Real weight `w[j, i]` including the layer scale.
    pub fn weight(&self, j: usize, i: usize) -> f64 {
        self.entry(j * self.in_dim + i) * f64::from(self.scale_exp).exp2()
    }

    /// Real bias `b[j]` including the layer scale.
    pub fn bias(&self, j: usize) -> f64 {
        self.entry(self.in_dim * self.out_dim + j) * f64::from(self.scale_exp).exp2()
    }

    /// Copy of this layer held in the working format of `precision`: `f32`
    /// for the reference path, `fmt` mantissas for a fixed path.
    pub fn promoted(&self, precision: Precision) -> DenseLayer {
        let n = self.param_count();
        let nw = self.in_dim * self.out_dim;
        let params = match precision {
            Precision::Float32 => {
                let vals: Vec<f32> = (0..n).map(|k| self.entry(k) as f32).collect();
                LayerParams::Float {
                    weights: vals[..nw].to_vec(),
                    bias: vals[nw..].to_vec(),
                }
            }
            Precision::Fixed(fmt) => {
                let vals: Vec<i32> = (0..n)
                    .map(|k| match self.entry_fixed(k) {
                        Some(x) => x.requantize(fmt).mantissa() as i32,
                        None => quantize(self.entry(k), fmt).mantissa() as i32,
                    })
                    .collect();
                LayerParams::Fixed {
                    fmt,
                    weights: vals[..nw].to_vec(),
                    bias: vals[nw..].to_vec(),
                }
            }
        };
        DenseLayer {
            params,
            ..self.clone()
        }
    }

    /// Overwrites the entries selected by `indices` with `values`. The
    /// values must already be in this layer's storage representation.
    pub(crate) fn write_entries(&mut self, indices: &[usize], values: EntryValues<'_>) {
        let nw = self.in_dim * self.out_dim;
        match (&mut self.params, values) {
            (LayerParams::Fixed { weights, bias, .. }, EntryValues::Fixed(v)) => {
                for (&idx, &m) in indices.iter().zip(v) {
                    if idx < nw {
                        weights[idx] = m;
                    } else {
                        bias[idx - nw] = m;
                    }
                }
            }
            (LayerParams::Float { weights, bias }, EntryValues::Float(v)) => {
                for (&idx, &x) in indices.iter().zip(v) {
                    if idx < nw {
                        weights[idx] = x;
                    } else {
                        bias[idx - nw] = x;
                    }
                }
            }
            _ => unreachable!("entry representation must match the layer storage"),
        }
    }
}

pub(crate) enum EntryValues<'a> {
    Fixed(&'a [i32]),
    Float(&'a [f32]),
}

/// Which entries of which layer are trainable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Selector {
    All,
    /// Entry indices into the layer's weights (row-major) followed by biases.
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightMask {
    pub layer_index: usize,
    pub selector: Selector,
}

impl WeightMask {
    pub fn layer(layer_index: usize) -> Self {
        Self {
            layer_index,
            selector: Selector::All,
        }
    }

    /// Sorts and deduplicates the explicit index set.
    pub fn explicit(layer_index: usize, mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self {
            layer_index,
            selector: Selector::Explicit(indices),
        }
    }

    /// Resolved entry indices for `model`.
    pub fn indices(&self, model: &Model) -> Result<Vec<usize>, NetError> {
        let layer = model.layers.get(self.layer_index).ok_or_else(|| {
            NetError::Mask(format!(
                "layer {} out of range ({} layers)",
                self.layer_index,
                model.layers.len()
            ))
        })?;
        let n = layer.param_count();
        match &self.selector {
            Selector::All => Ok((0..n).collect()),
            Selector::Explicit(ix) => {
                if ix.is_empty() {
                    return Err(NetError::Mask("empty selection".into()));
                }
                if let Some(&bad) = ix.iter().find(|&&k| k as usize >= n) {
                    return Err(NetError::Mask(format!("index {bad} out of range ({n} entries)")));
                }
                let mut out: Vec<usize> = ix.iter().map(|&k| k as usize).collect();
                out.sort_unstable();
                out.dedup();
                Ok(out)
            }
        }
    }

    /// Number of selected entries (W).
    pub fn count(&self, model: &Model) -> Result<usize, NetError> {
        Ok(self.indices(model)?.len())
    }
}

/// A chain of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input_dim: usize,
    num_classes: usize,
    layers: Vec<DenseLayer>,
    mask: Option<WeightMask>,
}

impl Model {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NetError> {
        let first = layers
            .first()
            .ok_or_else(|| NetError::Invalid("model needs at least one layer".into()))?;
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(NetError::Invalid(format!(
                    "layer {k} outputs {} but layer {} expects {}",
                    pair[0].out_dim,
                    k + 1,
                    pair[1].in_dim
                )));
            }
        }
        Ok(Self {
            input_dim: first.in_dim,
            num_classes: layers[layers.len() - 1].out_dim,
            layers,
            mask: None,
        })
    }

    pub fn with_mask(mut self, mask: WeightMask) -> Result<Self, NetError> {
        mask.indices(&self)?;
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn set_mask(&mut self, mask: Option<WeightMask>) -> Result<(), NetError> {
        if let Some(m) = &mask {
            m.indices(self)?;
        }
        self.mask = mask;
        Ok(())
    }

    pub fn mask(&self) -> Option<&WeightMask> {
        self.mask.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Real-valued outputs for a real input vector under `precision`.
    pub fn forward(&self, input: &[f32], precision: Precision) -> Result<Vec<f64>, NetError> {
        self.view().forward(input, precision)
    }

    pub fn predict(&self, input: &[f32], precision: Precision) -> Result<usize, NetError> {
        Ok(argmax(&self.forward(input, precision)?))
    }

    /// The unmodified model as a view.
    pub fn view(&self) -> ModelView<'_> {
        ModelView {
            base: self,
            overlay: None,
        }
    }
}

/// A model with (at most) one layer replaced; the base is borrowed and
/// never modified.
#[derive(Debug, Clone)]
pub struct ModelView<'a> {
    base: &'a Model,
    overlay: Option<(usize, DenseLayer)>,
}

impl<'a> ModelView<'a> {
    pub fn with_layer(base: &'a Model, index: usize, layer: DenseLayer) -> Result<Self, NetError> {
        let old = base
            .layers
            .get(index)
            .ok_or_else(|| NetError::Invalid(format!("no layer {index}")))?;
        if old.in_dim != layer.in_dim || old.out_dim != layer.out_dim {
            return Err(NetError::Invalid(format!(
                "replacement layer {}x{} does not fit slot {}x{}",
                layer.out_dim, layer.in_dim, old.out_dim, old.in_dim
            )));
        }
        Ok(Self {
            base,
            overlay: Some((index, layer)),
        })
    }

    pub fn base(&self) -> &'a Model {
        self.base
    }

    pub fn layer(&self, idx: usize) -> &DenseLayer {
        match &self.overlay {
            Some((k, l)) if *k == idx => l,
            _ => &self.base.layers[idx],
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        (0..self.base.layers.len()).map(move |k| self.layer(k))
    }

    pub fn plan(&self, precision: Precision) -> Result<Plan, NetError> {
        Plan::build(self.layers(), precision)
    }

    pub fn forward(&self, input: &[f32], precision: Precision) -> Result<Vec<f64>, NetError> {
        let plan = self.plan(precision)?;
        let x = plan.prepare(input)?;
        Ok(plan.outputs_real(&plan.run(&x)))
    }

    /// Materializes the view into an owned model (mask carried over).
    pub fn to_model(&self) -> Model {
        let mut m = self.base.clone();
        if let Some((k, l)) = &self.overlay {
            m.layers[*k] = l.clone();
        }
        m
    }
}

/// Index of the largest output; ties go to the lowest index.
pub fn argmax(outputs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in outputs.iter().enumerate() {
        if v > outputs[best] {
            best = k;
        }
    }
    best
}

/// `theta = omega + sigma * epsilon` on the masked entries of the masked
/// layer, computed in the working format of `precision`. Entries outside the
/// mask keep their stored values.
pub fn apply_perturbation<'a>(
    model: &'a Model,
    mask: &WeightMask,
    epsilon: &[Fixed],
    sigma: f64,
    precision: Precision,
) -> Result<ModelView<'a>, NetError> {
    let indices = mask.indices(model)?;
    if epsilon.len() != indices.len() {
        return Err(NetError::Dimension {
            what: "epsilon",
            expected: indices.len(),
            got: epsilon.len(),
        });
    }
    let layer = model.layers[mask.layer_index].promoted(precision);
    let mut out = layer.clone();
    match precision {
        Precision::Float32 => {
            let vals: Vec<f32> = indices
                .iter()
                .zip(epsilon)
                .map(|(&idx, e)| (layer.entry(idx) + sigma * e.to_f64()) as f32)
                .collect();
            out.write_entries(&indices, EntryValues::Float(&vals));
        }
        Precision::Fixed(fmt) => {
            let vals: Vec<i32> = indices
                .iter()
                .zip(epsilon)
                .map(|(&idx, e)| {
                    let w = layer.entry_fixed(idx).expect("promoted layer is fixed");
                    let step = scale_noise(e.requantize(fmt), sigma, fmt);
                    w.saturating_add(step).expect("same format").mantissa() as i32
                })
                .collect();
            out.write_entries(&indices, EntryValues::Fixed(&vals));
        }
    }
    ModelView::with_layer(model, mask.layer_index, out)
}

/// Format of a non-power-of-two sigma used as a fixed-point multiplier.
pub(crate) const SIGMA_FMT: (u32, u32) = (32, 24);

/// `sigma * eps` in `fmt`: a shift when sigma is a power of two, otherwise a
/// fixed-point multiply.
pub(crate) fn scale_noise(eps: Fixed, sigma: f64, fmt: QFormat) -> Fixed {
    let p = po2_quantize(sigma);
    if p.to_f64() == sigma {
        shift_mul(eps, p)
    } else {
        let s = quantize(sigma, QFormat::signed(SIGMA_FMT.0, SIGMA_FMT.1).expect("static format"));
        eps.mul_into(s, fmt)
    }
}
