//! Compiled forward passes.
//!
//! A [`Plan`] flattens a chain of layers into the arrays the inner loops
//! want: folded `f32` weights for the reference path, or aligned integer
//! mantissas with precomputed requantization shifts for the fixed path.
//! Building a plan is cheap next to running it over a dataset.

use crate::error::NetError;
use crate::fxp::{round_shift_right, Fixed, QFormat, ACC_MAX, ACC_MIN};

use super::{Activation, DenseLayer, LayerParams, Model, Precision};

#[derive(Debug, Clone)]
pub struct FloatLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    relu: bool,
}

#[derive(Debug, Clone)]
pub struct FloatPlan {
    layers: Vec<FloatLayer>,
}

#[derive(Debug, Clone)]
pub struct FixedLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<i32>,
    /// Bias mantissas aligned to the accumulator.
    bias: Vec<i32>,
    /// Rows whose worst-case sum cannot leave the 32-bit range.
    no_overflow: Vec<bool>,
    /// Right shift from accumulator alignment to the output format.
    shift: i64,
    relu: bool,
    out_fmt: QFormat,
}

#[derive(Debug, Clone)]
pub struct FixedPlan {
    in_fmt: QFormat,
    layers: Vec<FixedLayer>,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Float(FloatPlan),
    Fixed(FixedPlan),
}

/// An input vector converted once into a plan's input representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedInput {
    Float(Vec<f32>),
    Fixed(Vec<i32>),
}

/// Raw outputs in the plan's representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutput {
    Float(Vec<f32>),
    Fixed(Vec<i32>),
}

impl Plan {
    pub fn build<'a>(
        layers: impl Iterator<Item = &'a DenseLayer>,
        precision: Precision,
    ) -> Result<Plan, NetError> {
        match precision {
            Precision::Float32 => Ok(Plan::Float(FloatPlan::build(layers))),
            Precision::Fixed(fmt) => {
                let in_fmt = fmt.with_sign(false)?;
                Ok(Plan::Fixed(FixedPlan::build(layers, fmt, in_fmt)?))
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Plan::Float(p) => p.layers[0].in_dim,
            Plan::Fixed(p) => p.layers[0].in_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Plan::Float(p) => p.layers[p.layers.len() - 1].out_dim,
            Plan::Fixed(p) => p.layers[p.layers.len() - 1].out_dim,
        }
    }

    pub fn prepare(&self, input: &[f32]) -> Result<PreparedInput, NetError> {
        if input.len() != self.input_dim() {
            return Err(NetError::Dimension {
                what: "input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(match self {
            Plan::Float(_) => PreparedInput::Float(input.to_vec()),
            Plan::Fixed(p) => PreparedInput::Fixed(
                input
                    .iter()
                    .map(|&x| crate::fxp::quantize(f64::from(x), p.in_fmt).mantissa() as i32)
                    .collect(),
            ),
        })
    }

    pub fn run(&self, x: &PreparedInput) -> PlanOutput {
        match (self, x) {
            (Plan::Float(p), PreparedInput::Float(x)) => PlanOutput::Float(p.run(x)),
            (Plan::Fixed(p), PreparedInput::Fixed(x)) => PlanOutput::Fixed(p.run(x)),
            _ => panic!("prepared input does not match plan precision"),
        }
    }

    pub fn outputs_real(&self, out: &PlanOutput) -> Vec<f64> {
        match (self, out) {
            (_, PlanOutput::Float(v)) => v.iter().map(|&y| f64::from(y)).collect(),
            (Plan::Fixed(p), PlanOutput::Fixed(v)) => {
                let step = p.out_fmt().step();
                v.iter().map(|&m| f64::from(m) * step).collect()
            }
            (Plan::Float(_), PlanOutput::Fixed(_)) => unreachable!(),
        }
    }
}

fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    let mut lanes = [0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] += x[l] * y[l];
        }
    }
    let mut s = ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5]))
        + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl FloatPlan {
    pub fn build<'a>(layers: impl Iterator<Item = &'a DenseLayer>) -> FloatPlan {
        let layers = layers
            .map(|l| {
                let scale = f64::from(l.scale_exp()).exp2();
                let nw = l.in_dim() * l.out_dim();
                FloatLayer {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    weights: (0..nw).map(|k| (l.entry(k) * scale) as f32).collect(),
                    bias: (0..l.out_dim())
                        .map(|j| (l.entry(nw + j) * scale) as f32)
                        .collect(),
                    relu: l.activation() == Activation::Relu,
                }
            })
            .collect();
        FloatPlan { layers }
    }

    pub fn run(&self, x: &[f32]) -> Vec<f32> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            next.clear();
            next.extend(l.weights.chunks_exact(l.in_dim).zip(&l.bias).map(|(row, &b)| {
                let y = b + dot_f32(row, &cur);
                if l.relu {
                    y.max(0.0)
                } else {
                    y
                }
            }));
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

impl FixedLayer {
    fn build(l: &DenseLayer, fmt: QFormat, in_fmt: QFormat) -> Result<FixedLayer, NetError> {
        let nw = l.in_dim() * l.out_dim();
        let (wfmt, weights, bias_m): (QFormat, Vec<i32>, Vec<i32>) = match l.params() {
            LayerParams::Fixed { fmt: wf, weights, bias } => (*wf, weights.clone(), bias.clone()),
            LayerParams::Float { .. } => {
                let p = l.promoted(Precision::Fixed(fmt));
                match p.params {
                    LayerParams::Fixed { weights, bias, .. } => (fmt, weights, bias),
                    LayerParams::Float { .. } => unreachable!(),
                }
            }
        };
        debug_assert_eq!(weights.len(), nw);
        let relu = l.activation() == Activation::Relu;
        let out_fmt = fmt.with_sign(!relu)?;
        let acc_frac = i64::from(wfmt.frac_bits()) + i64::from(in_fmt.frac_bits());
        let bias: Vec<i32> = bias_m
            .iter()
            .map(|&b| {
                (i128::from(b) << in_fmt.frac_bits()).clamp(i128::from(ACC_MIN), i128::from(ACC_MAX)) as i32
            })
            .collect();
        let x_max = in_fmt.max_mantissa().max(-in_fmt.min_mantissa()) as i128;
        let no_overflow = weights
            .chunks_exact(l.in_dim())
            .zip(&bias)
            .map(|(row, &b)| {
                let s: i128 = row.iter().map(|&w| i128::from(w).abs() * x_max).sum::<i128>()
                    + i128::from(b).abs();
                s <= i128::from(ACC_MAX)
            })
            .collect();
        Ok(FixedLayer {
            in_dim: l.in_dim(),
            out_dim: l.out_dim(),
            weights,
            bias,
            no_overflow,
            shift: acc_frac - i64::from(l.scale_exp()) - i64::from(out_fmt.frac_bits()),
            relu,
            out_fmt,
        })
    }

    #[inline]
    fn row_acc(&self, j: usize, x: &[i32]) -> i64 {
        let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
        let b = self.bias[j];
        if self.no_overflow[j] {
            let s = row
                .iter()
                .zip(x)
                .fold(0i32, |s, (&w, &v)| s.wrapping_add(w.wrapping_mul(v)));
            i64::from(b.wrapping_add(s))
        } else {
            let mut acc = i64::from(b);
            for (&w, &v) in row.iter().zip(x) {
                acc = (acc + i64::from(w) * i64::from(v)).clamp(ACC_MIN, ACC_MAX);
            }
            acc
        }
    }

    #[inline]
    fn finish(&self, acc: i64) -> i32 {
        let y = if self.shift >= 0 {
            round_shift_right(acc, self.shift as u32)
        } else {
            acc.saturating_mul(1i64 << (-self.shift).min(62))
        };
        let y = if self.relu { y.max(0) } else { y };
        self.out_fmt.saturate(y) as i32
    }

    fn run_into(&self, x: &[i32], out: &mut Vec<i32>) {
        out.clear();
        out.extend((0..self.out_dim).map(|j| self.finish(self.row_acc(j, x))));
    }
}

impl FixedPlan {
    pub fn build<'a>(
        layers: impl Iterator<Item = &'a DenseLayer>,
        fmt: QFormat,
        in_fmt: QFormat,
    ) -> Result<FixedPlan, NetError> {
        if !fmt.is_signed() || fmt.total_bits() > 31 || in_fmt.total_bits() > 31 {
            return Err(NetError::Invalid(format!(
                "fixed datapath needs a signed format of at most 31 bits, got {fmt}"
            )));
        }
        let mut out = Vec::new();
        let mut cur_fmt = in_fmt;
        for l in layers {
            let fl = FixedLayer::build(l, fmt, cur_fmt)?;
            cur_fmt = fl.out_fmt;
            out.push(fl);
        }
        if out.is_empty() {
            return Err(NetError::Invalid("empty plan".into()));
        }
        Ok(FixedPlan { in_fmt, layers: out })
    }

    pub fn in_fmt(&self) -> QFormat {
        self.in_fmt
    }

    pub fn out_fmt(&self) -> QFormat {
        self.layers[self.layers.len() - 1].out_fmt
    }

    pub fn run(&self, x: &[i32]) -> Vec<i32> {
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(cur.len());
        for l in &self.layers {
            l.run_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

fn common_format(input: &[Fixed]) -> Result<QFormat, NetError> {
    let first = input.first().ok_or(NetError::Dimension {
        what: "input",
        expected: 1,
        got: 0,
    })?;
    let fmt = first.format();
    if let Some(other) = input.iter().find(|x| x.format() != fmt) {
        return Err(crate::error::FxpError::FormatMismatch {
            left: fmt,
            right: other.format(),
        }
        .into());
    }
    Ok(fmt)
}

/// One fixed-point layer: 32-bit saturating MAC, then requantization into
/// `fmt` (unsigned after a relu).
pub fn dense_forward(layer: &DenseLayer, input: &[Fixed], fmt: QFormat) -> Result<Vec<Fixed>, NetError> {
    if input.len() != layer.in_dim() {
        return Err(NetError::Dimension {
            what: "input",
            expected: layer.in_dim(),
            got: input.len(),
        });
    }
    let in_fmt = common_format(input)?;
    let plan = FixedPlan::build(std::iter::once(layer), fmt, in_fmt)?;
    let x: Vec<i32> = input.iter().map(|v| v.mantissa() as i32).collect();
    let out_fmt = plan.out_fmt();
    Ok(plan
        .run(&x)
        .into_iter()
        .map(|m| Fixed::from_mantissa(i64::from(m), out_fmt))
        .collect())
}

/// Sequential composition of [`dense_forward`] over every layer.
pub fn model_forward(model: &Model, input: &[Fixed], fmt: QFormat) -> Result<Vec<Fixed>, NetError> {
    if input.len() != model.input_dim() {
        return Err(NetError::Dimension {
            what: "input",
            expected: model.input_dim(),
            got: input.len(),
        });
    }
    let in_fmt = common_format(input)?;
    let plan = FixedPlan::build(model.layers().iter(), fmt, in_fmt)?;
    let x: Vec<i32> = input.iter().map(|v| v.mantissa() as i32).collect();
    let out_fmt = plan.out_fmt();
    Ok(plan
        .run(&x)
        .into_iter()
        .map(|m| Fixed::from_mantissa(i64::from(m), out_fmt))
        .collect())
}
