//! C ABI over the `fpes` crate.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`FpesStatus`]; on failure a thread-local message is available
//! through [`fpes_last_error_message`]. Output pointers are written only on
//! success.
//!
//! Precisions are passed as `(total_bits, frac_bits)`, with `total_bits == 0`
//! meaning the 32-bit float reference path.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fpes::bench::{evaluate_accuracy, Dataset};
use fpes::estrain::{
    LossQuantization, ModelObjective, NoiseSource, Sampling, TrainConfig, Trainer, TrainerState, UpdateRounding,
};
use fpes::hwcost::{self, HwParams};
use fpes::noise::LfsrMode;
use fpes::qnet::{checkpoint, load_checkpoint, save_checkpoint, Model, Precision, WeightMask};
use fpes::{CheckpointError, DataError, HwError, NetError, TrainError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpesStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Checkpoint = 4,
    Data = 5,
    Diverged = 6,
    StateMismatch = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Perturbation source of a training run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpesNoise {
    Counter = 0,
    LfsrUniform = 1,
    LfsrClt = 2,
}

/// ES settings. Fill with [`fpes_train_config_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FpesTrainConfig {
    pub population: u32,
    pub iterations: u32,
    pub sigma: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Index of the layer whose weights and biases are retrained.
    pub layer: u32,
    /// 0 selects the float path.
    pub precision_total_bits: u32,
    pub precision_frac_bits: u32,
    /// Nonzero rounds member losses to powers of two (fixed path only).
    pub loss_po2: u8,
    /// An [`FpesNoise`] value.
    pub noise: u32,
    /// Nonzero pairs members as `(eps, -eps)`.
    pub mirrored: u8,
    /// Nonzero rounds fixed-point weight updates stochastically.
    pub stochastic_rounding: u8,
    /// Evaluation threads; results do not depend on it.
    pub workers: u32,
}

/// Timing and sizing inputs of the hardware model.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FpesHwParams {
    pub t_f: f64,
    pub t_l: f64,
    pub t_g: f64,
    pub t_u: f64,
    pub w: u64,
    pub p: u64,
    pub m: u64,
    pub n: u64,
    pub k: u64,
}

/// Opaque network.
pub struct FpesModel(Model);

/// Opaque labeled dataset.
pub struct FpesDataset(Dataset);

/// Opaque resumable training run. Owns copies of its model and data.
pub struct FpesTrainer {
    model: Model,
    data: Dataset,
    config: TrainConfig,
    state: Vec<u8>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(FpesStatus, String);

impl Failure {
    fn new(status: FpesStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let status = match &e {
            TrainError::Config(_) => FpesStatus::Config,
            TrainError::Diverged(_) => FpesStatus::Diverged,
            TrainError::StateMismatch(_) => FpesStatus::StateMismatch,
            TrainError::Checkpoint(c) => return Failure::from_checkpoint(c, e.to_string()),
            TrainError::Net(_) => FpesStatus::InvalidArgument,
            TrainError::Data(_) => FpesStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

impl Failure {
    fn from_checkpoint(c: &CheckpointError, msg: String) -> Self {
        let status = match c {
            CheckpointError::Io { .. } => FpesStatus::Io,
            CheckpointError::Net(_) => FpesStatus::InvalidArgument,
            _ => FpesStatus::Checkpoint,
        };
        Failure(status, msg)
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        let msg = e.to_string();
        Failure::from_checkpoint(&e, msg)
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        Failure(FpesStatus::InvalidArgument, e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure(FpesStatus::Data, e.to_string())
    }
}

impl From<HwError> for Failure {
    fn from(e: HwError) -> Self {
        Failure(FpesStatus::InvalidArgument, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FpesStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure(FpesStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            FpesStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn href<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(FpesStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(FpesStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(FpesStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::new(FpesStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_string)
        .map_err(|_| Failure::new(FpesStatus::InvalidArgument, "path is not UTF-8"))
}

/// Copies `bytes` into a caller buffer; `len_out` always receives the full
/// length so callers can size a retry.
unsafe fn copy_out(bytes: &[u8], buf: *mut u8, cap: usize, len_out: *mut usize) -> Result<(), Failure> {
    out_ptr(len_out, "len_out")?;
    *len_out = bytes.len();
    if cap < bytes.len() {
        return Err(Failure::new(
            FpesStatus::BufferTooSmall,
            format!("buffer holds {cap} bytes, {} needed", bytes.len()),
        ));
    }
    if !bytes.is_empty() {
        out_ptr(buf, "buf")?;
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    }
    Ok(())
}

fn precision(total_bits: u32, frac_bits: u32) -> Result<Precision, Failure> {
    if total_bits == 0 {
        Ok(Precision::Float32)
    } else {
        Ok(Precision::fixed(total_bits, frac_bits)?)
    }
}

fn train_config(c: &FpesTrainConfig) -> Result<TrainConfig, Failure> {
    Ok(TrainConfig {
        population: c.population as usize,
        iterations: c.iterations as usize,
        sigma: c.sigma,
        alpha: c.alpha,
        seed: c.seed,
        mask: WeightMask::layer(c.layer as usize),
        precision: precision(c.precision_total_bits, c.precision_frac_bits)?,
        loss_quantization: if c.loss_po2 != 0 {
            LossQuantization::Po2
        } else {
            LossQuantization::Exact
        },
        noise: match c.noise {
            n if n == FpesNoise::Counter as u32 => NoiseSource::Counter,
            n if n == FpesNoise::LfsrUniform as u32 => NoiseSource::Lfsr(LfsrMode::Uniform),
            n if n == FpesNoise::LfsrClt as u32 => NoiseSource::Lfsr(LfsrMode::CltSum),
            n => return Err(Failure::new(FpesStatus::InvalidArgument, format!("unknown noise source {n}"))),
        },
        sampling: if c.mirrored != 0 {
            Sampling::Mirrored
        } else {
            Sampling::Independent
        },
        update_rounding: if c.stochastic_rounding != 0 {
            UpdateRounding::Stochastic
        } else {
            UpdateRounding::Nearest
        },
        workers: c.workers as usize,
    })
}

/// Copies the message of the last failed call on this thread into `buf`
/// (NUL-terminated, truncated to `cap`) and returns its full length
/// excluding the terminator. Returns 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn fpes_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fpes_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_load(path: *const c_char, out: *mut *mut FpesModel) -> FpesStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = load_checkpoint(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(FpesModel(m)));
        Ok(())
    })
}

/// Writes a checkpoint file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_save(model: *const FpesModel, path: *const c_char) -> FpesStatus {
    guard(|| {
        let m = href(model, "model")?;
        save_checkpoint(&m.0, path_arg(path)?)?;
        Ok(())
    })
}

/// Decodes a checkpoint from memory.
///
/// # Safety
/// `bytes` must be valid for `len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_from_bytes(bytes: *const u8, len: usize, out: *mut *mut FpesModel) -> FpesStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let m = checkpoint::decode(in_slice(bytes, len, "bytes")?)?;
        *out = Box::into_raw(Box::new(FpesModel(m)));
        Ok(())
    })
}

/// Encodes a model as checkpoint bytes. With a null or short buffer the
/// call fails with `BufferTooSmall` and `len_out` holds the needed size.
///
/// # Safety
/// `model` must be a live handle, `buf` valid for `cap` bytes, `len_out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_to_bytes(
    model: *const FpesModel,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> FpesStatus {
    guard(|| copy_out(&checkpoint::encode(&href(model, "model")?.0), buf, cap, len_out))
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_free(model: *mut FpesModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input width and class count.
///
/// # Safety
/// `model` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_shape(
    model: *const FpesModel,
    input_dim: *mut usize,
    num_classes: *mut usize,
) -> FpesStatus {
    guard(|| {
        let m = href(model, "model")?;
        out_ptr(input_dim, "input_dim")?;
        out_ptr(num_classes, "num_classes")?;
        *input_dim = m.0.input_dim();
        *num_classes = m.0.num_classes();
        Ok(())
    })
}

/// Runs one forward pass and writes `num_classes` real-valued outputs.
///
/// # Safety
/// `input` must hold `input_len` floats and `outputs` `outputs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_forward(
    model: *const FpesModel,
    input: *const f32,
    input_len: usize,
    total_bits: u32,
    frac_bits: u32,
    outputs: *mut f64,
    outputs_len: usize,
) -> FpesStatus {
    guard(|| {
        let m = href(model, "model")?;
        let x = in_slice(input, input_len, "input")?;
        let y = m.0.forward(x, precision(total_bits, frac_bits)?)?;
        if outputs_len < y.len() {
            return Err(Failure::new(
                FpesStatus::BufferTooSmall,
                format!("{} outputs needed", y.len()),
            ));
        }
        out_ptr(outputs, "outputs")?;
        ptr::copy_nonoverlapping(y.as_ptr(), outputs, y.len());
        Ok(())
    })
}

/// Predicted class of one input.
///
/// # Safety
/// `input` must hold `input_len` floats; `class_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_model_predict(
    model: *const FpesModel,
    input: *const f32,
    input_len: usize,
    total_bits: u32,
    frac_bits: u32,
    class_out: *mut usize,
) -> FpesStatus {
    guard(|| {
        let m = href(model, "model")?;
        out_ptr(class_out, "class_out")?;
        *class_out = m.0.predict(in_slice(input, input_len, "input")?, precision(total_bits, frac_bits)?)?;
        Ok(())
    })
}

/// Builds a dataset from `count` row-major samples of `dim` features in
/// `[0, 1]` and their labels.
///
/// # Safety
/// `features` must hold `count * dim` floats and `labels` `count` bytes.
#[no_mangle]
pub unsafe extern "C" fn fpes_dataset_new(
    dim: usize,
    num_classes: usize,
    features: *const f32,
    labels: *const u8,
    count: usize,
    out: *mut *mut FpesDataset,
) -> FpesStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let n = count
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(FpesStatus::InvalidArgument, "dataset size overflows"))?;
        let f = in_slice(features, n, "features")?.to_vec();
        let l = in_slice(labels, count, "labels")?.to_vec();
        *out = Box::into_raw(Box::new(FpesDataset(Dataset::new(dim, num_classes, f, l)?)));
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpes_dataset_free(data: *mut FpesDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Fraction of samples classified correctly.
///
/// # Safety
/// Handles must be live; `accuracy_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_accuracy(
    model: *const FpesModel,
    data: *const FpesDataset,
    total_bits: u32,
    frac_bits: u32,
    accuracy_out: *mut f64,
) -> FpesStatus {
    guard(|| {
        let m = href(model, "model")?;
        let d = href(data, "data")?;
        out_ptr(accuracy_out, "accuracy_out")?;
        *accuracy_out = evaluate_accuracy(&m.0, &d.0, precision(total_bits, frac_bits)?)?;
        Ok(())
    })
}

/// Desk defaults: N = 100, k = 100, sigma = 0.05, alpha = 0.01, layer 0,
/// float path, counter noise, independent sampling, one worker.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_train_config_default(out: *mut FpesTrainConfig) -> FpesStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let d = TrainConfig::new(WeightMask::layer(0));
        *out = FpesTrainConfig {
            population: d.population as u32,
            iterations: d.iterations as u32,
            sigma: d.sigma,
            alpha: d.alpha,
            seed: d.seed,
            layer: 0,
            precision_total_bits: 0,
            precision_frac_bits: 0,
            loss_po2: 0,
            noise: FpesNoise::Counter as u32,
            mirrored: u8::from(d.sampling == Sampling::Mirrored),
            stochastic_rounding: u8::from(d.update_rounding == UpdateRounding::Stochastic),
            workers: 1,
        };
        Ok(())
    })
}

/// Starts a training run on copies of `model` and `data`.
///
/// # Safety
/// Handles and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_new(
    model: *const FpesModel,
    data: *const FpesDataset,
    config: *const FpesTrainConfig,
    out: *mut *mut FpesTrainer,
) -> FpesStatus {
    guard(|| {
        let (m, d, c) = (href(model, "model")?, href(data, "data")?, href(config, "config")?);
        out_ptr(out, "out")?;
        let cfg = train_config(c)?;
        cfg.validate()?;
        let obj = ModelObjective::new(&m.0, &d.0, &cfg.mask, cfg.precision)?;
        let state = Trainer::new(&obj, cfg.clone(), obj.initial_weights())?.suspend();
        *out = Box::into_raw(Box::new(FpesTrainer {
            model: m.0.clone(),
            data: d.0.clone(),
            config: cfg,
            state,
        }));
        Ok(())
    })
}

/// Continues a run from a state blob produced by [`fpes_trainer_state`].
/// The configuration must match the one the state was written with.
///
/// # Safety
/// Handles and `config` must be valid, `state` valid for `len` bytes and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_resume(
    model: *const FpesModel,
    data: *const FpesDataset,
    config: *const FpesTrainConfig,
    state: *const u8,
    len: usize,
    out: *mut *mut FpesTrainer,
) -> FpesStatus {
    guard(|| {
        let (m, d, c) = (href(model, "model")?, href(data, "data")?, href(config, "config")?);
        out_ptr(out, "out")?;
        let cfg = train_config(c)?;
        cfg.validate()?;
        let blob = in_slice(state, len, "state")?;
        let obj = ModelObjective::new(&m.0, &d.0, &cfg.mask, cfg.precision)?;
        Trainer::resume(&obj, blob, &cfg)?;
        *out = Box::into_raw(Box::new(FpesTrainer {
            model: m.0.clone(),
            data: d.0.clone(),
            config: cfg,
            state: blob.to_vec(),
        }));
        Ok(())
    })
}

/// Runs up to `iterations` more iterations; `done_out` (optional) receives
/// the number of completed iterations afterwards.
///
/// # Safety
/// `trainer` must be a live handle; `done_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_run(trainer: *mut FpesTrainer, iterations: u32, done_out: *mut u32) -> FpesStatus {
    guard(|| {
        let tr = trainer
            .as_mut()
            .ok_or_else(|| Failure::new(FpesStatus::NullPointer, "trainer is null"))?;
        let obj = ModelObjective::new(&tr.model, &tr.data, &tr.config.mask, tr.config.precision)?;
        let mut t = Trainer::resume(&obj, &tr.state, &tr.config)?;
        let target = t.state().iteration().saturating_add(iterations as usize);
        t.run_until(target)?;
        tr.state = t.suspend();
        if !done_out.is_null() {
            *done_out = t.state().iteration() as u32;
        }
        Ok(())
    })
}

/// Completed iterations and the mean population reward of the last one
/// (0 before the first).
///
/// # Safety
/// `trainer` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_progress(
    trainer: *const FpesTrainer,
    done_out: *mut u32,
    last_reward_out: *mut f64,
    forward_passes_out: *mut u64,
) -> FpesStatus {
    guard(|| {
        let tr = href(trainer, "trainer")?;
        out_ptr(done_out, "done_out")?;
        out_ptr(last_reward_out, "last_reward_out")?;
        out_ptr(forward_passes_out, "forward_passes_out")?;
        let s = TrainerState::decode(&tr.state, tr.config.workers)?;
        *done_out = s.iteration() as u32;
        *last_reward_out = s.history().last().map_or(0.0, |r| r.mean_reward);
        *forward_passes_out = s.forward_passes();
        Ok(())
    })
}

/// Serialized trainer state; same buffer protocol as
/// [`fpes_model_to_bytes`].
///
/// # Safety
/// `trainer` must be a live handle, `buf` valid for `cap` bytes, `len_out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_state(
    trainer: *const FpesTrainer,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> FpesStatus {
    guard(|| copy_out(&href(trainer, "trainer")?.state, buf, cap, len_out))
}

/// The model with the current trained weights, as a new handle.
///
/// # Safety
/// `trainer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_model(trainer: *const FpesTrainer, out: *mut *mut FpesModel) -> FpesStatus {
    guard(|| {
        let tr = href(trainer, "trainer")?;
        out_ptr(out, "out")?;
        let obj = ModelObjective::new(&tr.model, &tr.data, &tr.config.mask, tr.config.precision)?;
        let s = TrainerState::decode(&tr.state, tr.config.workers)?;
        *out = Box::into_raw(Box::new(FpesModel(obj.materialize(s.weights())?)));
        Ok(())
    })
}

/// # Safety
/// `trainer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpes_trainer_free(trainer: *mut FpesTrainer) {
    if !trainer.is_null() {
        drop(Box::from_raw(trainer));
    }
}

fn hw(p: &FpesHwParams) -> Result<HwParams, Failure> {
    Ok(HwParams::from_seconds(p.t_f, p.t_l, p.t_g, p.t_u, p.w, p.p, p.m, p.n, p.k)?)
}

/// Seconds for one iteration on one image, with exact and rounded-up
/// `W / P`.
///
/// # Safety
/// `params` must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_hw_iteration_time(
    params: *const FpesHwParams,
    seconds_out: *mut f64,
    ceil_seconds_out: *mut f64,
) -> FpesStatus {
    guard(|| {
        let p = hw(href(params, "params")?)?;
        out_ptr(seconds_out, "seconds_out")?;
        out_ptr(ceil_seconds_out, "ceil_seconds_out")?;
        let t = hwcost::iteration_time(&p)?;
        *seconds_out = t.seconds();
        *ceil_seconds_out = t.ceil_seconds();
        Ok(())
    })
}

/// Seconds for a whole run counting forward passes.
///
/// # Safety
/// `params` must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_hw_total_training_time(
    params: *const FpesHwParams,
    seconds_out: *mut f64,
    ceil_seconds_out: *mut f64,
) -> FpesStatus {
    guard(|| {
        let p = hw(href(params, "params")?)?;
        out_ptr(seconds_out, "seconds_out")?;
        out_ptr(ceil_seconds_out, "ceil_seconds_out")?;
        let t = hwcost::total_training_time(&p)?;
        *seconds_out = t.seconds();
        *ceil_seconds_out = t.ceil_seconds();
        Ok(())
    })
}

/// LUT and FF counts of `blocks` training blocks on the default part.
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpes_hw_area(
    blocks: u64,
    include_loss_accumulator: u8,
    lut_out: *mut u64,
    ff_out: *mut u64,
    lut_pct_out: *mut f64,
    ff_pct_out: *mut f64,
) -> FpesStatus {
    guard(|| {
        for (p, n) in [(lut_out.cast::<u8>(), "lut_out"), (ff_out.cast(), "ff_out")] {
            out_ptr(p, n)?;
        }
        out_ptr(lut_pct_out, "lut_pct_out")?;
        out_ptr(ff_pct_out, "ff_pct_out")?;
        let a = hwcost::area_overhead(blocks, include_loss_accumulator != 0)?;
        *lut_out = a.lut;
        *ff_out = a.ff;
        *lut_pct_out = a.lut_pct;
        *ff_pct_out = a.ff_pct;
        Ok(())
    })
}
