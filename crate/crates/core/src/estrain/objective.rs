use std::sync::atomic::{AtomicU64, Ordering};

use crate::bench::Dataset;
use crate::error::TrainError;
use crate::fxp::{Accumulator, Fixed};
use crate::qnet::{DenseLayer, EntryValues, Model, ModelView, Plan, PlanOutput, Precision, PreparedInput, WeightMask};

use super::{loss_format, Reward, Weights};

/// A black-box reward over a flat weight vector. Implementations must be
/// pure: the same weights always give the same reward.
pub trait Objective: Sync {
    /// Number of trainable entries (W).
    fn dim(&self) -> usize;

    fn reward(&self, theta: &Weights) -> Result<Reward, TrainError>;

    /// Cumulative forward passes performed so far.
    fn forward_passes(&self) -> u64 {
        0
    }
}

/// Mean negative MAE of a model over a dataset, as a function of the masked
/// entries of one layer.
pub struct ModelObjective<'a> {
    model: &'a Model,
    mask: WeightMask,
    indices: Vec<usize>,
    working: DenseLayer,
    precision: Precision,
    inputs: Vec<PreparedInput>,
    labels: Vec<usize>,
    passes: AtomicU64,
}

impl<'a> ModelObjective<'a> {
    pub fn new(
        model: &'a Model,
        data: &Dataset,
        mask: &WeightMask,
        precision: Precision,
    ) -> Result<Self, TrainError> {
        if data.dim() != model.input_dim() {
            return Err(TrainError::Config(format!(
                "dataset dimension {} does not match model input {}",
                data.dim(),
                model.input_dim()
            )));
        }
        if data.num_classes() != model.num_classes() {
            return Err(TrainError::Config(format!(
                "dataset has {} classes, model {}",
                data.num_classes(),
                model.num_classes()
            )));
        }
        let indices = mask.indices(model)?;
        let working = model.layers()[mask.layer_index].promoted(precision);
        let plan = model.view().plan(precision)?;
        let inputs = data
            .samples()
            .map(|(x, _)| plan.prepare(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            model,
            mask: mask.clone(),
            indices,
            working,
            precision,
            inputs,
            labels: data.samples().map(|(_, y)| y).collect(),
            passes: AtomicU64::new(0),
        })
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    /// Current values of the masked entries, in the working representation.
    pub fn initial_weights(&self) -> Weights {
        match self.precision {
            Precision::Float32 => Weights::Float(self.indices.iter().map(|&k| self.working.entry(k) as f32).collect()),
            Precision::Fixed(fmt) => Weights::Fixed {
                fmt,
                mantissas: self
                    .indices
                    .iter()
                    .map(|&k| self.working.entry_fixed(k).expect("promoted layer is fixed").mantissa() as i32)
                    .collect(),
            },
        }
    }

    fn layer_with(&self, theta: &Weights) -> Result<DenseLayer, TrainError> {
        if theta.len() != self.indices.len() {
            return Err(TrainError::StateMismatch(format!(
                "{} weights for a mask of {}",
                theta.len(),
                self.indices.len()
            )));
        }
        let mut layer = self.working.clone();
        match (theta, self.precision) {
            (Weights::Float(v), Precision::Float32) => layer.write_entries(&self.indices, EntryValues::Float(v)),
            (Weights::Fixed { fmt, mantissas }, Precision::Fixed(p)) if *fmt == p => {
                layer.write_entries(&self.indices, EntryValues::Fixed(mantissas))
            }
            _ => {
                return Err(TrainError::StateMismatch(format!(
                    "weights do not match precision {}",
                    self.precision
                )))
            }
        }
        Ok(layer)
    }

    /// The base model with the masked entries replaced by `theta`.
    pub fn materialize(&self, theta: &Weights) -> Result<Model, TrainError> {
        let layer = self.layer_with(theta)?;
        let mut m = ModelView::with_layer(self.model, self.mask.layer_index, layer)?.to_model();
        m.set_mask(Some(self.mask.clone()))?;
        Ok(m)
    }
}

impl Objective for ModelObjective<'_> {
    fn dim(&self) -> usize {
        self.indices.len()
    }

    fn reward(&self, theta: &Weights) -> Result<Reward, TrainError> {
        let layer = self.layer_with(theta)?;
        let view = ModelView::with_layer(self.model, self.mask.layer_index, layer)?;
        let plan = view.plan(self.precision)?;
        let classes = self.model.num_classes();
        let denom = (self.labels.len() * classes) as f64;
        let r = match &plan {
            Plan::Float(_) => {
                let mut total = 0f64;
                for (x, &y) in self.inputs.iter().zip(&self.labels) {
                    let PlanOutput::Float(out) = plan.run(x) else { unreachable!() };
                    let mut s = 0f64;
                    for (c, &o) in out.iter().enumerate() {
                        let t = if c == y { 1.0 } else { 0.0 };
                        s += (f64::from(o) - t).abs();
                    }
                    total += s;
                }
                if !total.is_finite() {
                    return Err(TrainError::Diverged("non-finite loss".into()));
                }
                Reward::Real(-total / denom)
            }
            Plan::Fixed(p) => {
                let ofmt = p.out_fmt();
                let one = 1i64 << ofmt.frac_bits();
                let mut acc = Accumulator::new(ofmt.frac_bits());
                for (x, &y) in self.inputs.iter().zip(&self.labels) {
                    let PlanOutput::Fixed(out) = plan.run(x) else { unreachable!() };
                    for (c, &o) in out.iter().enumerate() {
                        let t = if c == y { one } else { 0 };
                        acc = acc.add_raw((i64::from(o) - t).abs());
                    }
                }
                let lfmt = loss_format(ofmt);
                let num = -(i128::from(acc.value()) << lfmt.frac_bits());
                let den = (self.labels.len() * classes) as i128 * (1i128 << ofmt.frac_bits());
                Reward::Fixed(Fixed::from_mantissa(div_round(num, den), lfmt))
            }
        };
        self.passes.fetch_add(self.labels.len() as u64, Ordering::Relaxed);
        Ok(r)
    }

    fn forward_passes(&self) -> u64 {
        self.passes.load(Ordering::Relaxed)
    }
}

/// `num / den` rounded half away from zero; `den > 0`.
fn div_round(num: i128, den: i128) -> i64 {
    let q = (num.abs() + den / 2) / den;
    let q = if num < 0 { -q } else { q };
    q.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64
}
