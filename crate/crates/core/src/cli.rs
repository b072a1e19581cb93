//! The `fpes` command-line front end.
//!
//! Subcommands follow the retraining workflow: `train-base` produces the
//! deployed model, `retrain` runs one ES retraining on corrupted data,
//! `experiment` sweeps noise levels and precisions, and `hwcost` evaluates
//! the hardware model. Every file written gets a `<file>.manifest.json`
//! sidecar with the resolved configuration needed to replay it.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bench::{
    evaluate_accuracy, inject_noise, load_mnist_dir, pool_mnist, quantize_model, run_recovery_experiment_with,
    synthetic_desk, train_baseline, BaselineConfig, Dataset, ExperimentConfig,
};
use crate::error::{CheckpointError, DataError, HwError, NetError, TrainError};
use crate::estrain::{IterationRecord, LossQuantization, ModelObjective, NoiseSource, Sampling, TrainConfig, Trainer, UpdateRounding};
use crate::hwcost::{self, HwParams, Part, Policy};
use crate::noise::LfsrMode;
use crate::qnet::{load_checkpoint, save_checkpoint, Model, Precision, WeightMask};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fpes", version, about = "Forward-pass-only incremental training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the float baseline and save it post-training quantized.
    TrainBase(TrainBaseArgs),
    /// Retrain one layer of a checkpoint on noise-corrupted data with ES.
    Retrain(RetrainArgs),
    /// Noise-recovery sweep over noise levels, precisions and seeds.
    Experiment(ExperimentArgs),
    /// Training-time, area and interleaving model.
    Hwcost(HwcostArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory with the four MNIST IDX files.
    #[arg(long, env = "FPES_DATA_DIR", value_name = "DIR")]
    data: Option<PathBuf>,
    /// Use the generated stand-in dataset instead of MNIST.
    #[arg(long)]
    synthetic: bool,
    /// Seed of the generated dataset.
    #[arg(long, default_value_t = 11)]
    data_seed: u64,
    /// Keep 28x28 MNIST images instead of pooling to 8x8.
    #[arg(long)]
    full_res: bool,
}

#[derive(Debug, Args)]
struct TrainBaseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output checkpoint.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Layer widths, input first [default: 64,32,16,10 or 784,200,100,10].
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f32,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Deployed weight format, or float32 to skip quantization.
    #[arg(long, default_value = "fixed4.3", value_parser = parse_precision)]
    quantize: Precision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossQuantArg {
    Exact,
    Po2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Counter,
    LfsrClt,
    LfsrUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Mirrored,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    Stochastic,
    Nearest,
}

#[derive(Debug, Args)]
struct EsArgs {
    /// Layer to retrain.
    #[arg(long, default_value_t = 0)]
    layer: usize,
    /// Population size N.
    #[arg(long, default_value_t = 100)]
    pop: usize,
    /// Iterations k.
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Perturbation scale.
    #[arg(long, default_value_t = DESK_SIGMA)]
    sigma: f64,
    /// Learning rate.
    #[arg(long, default_value_t = DESK_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = LossQuantArg::Exact)]
    loss_quant: LossQuantArg,
    #[arg(long, value_enum, default_value_t = NoiseArg::Counter)]
    noise: NoiseArg,
    /// Pair members as (eps, -eps) or draw each independently.
    #[arg(long, value_enum, default_value_t = SamplingArg::Mirrored)]
    sampling: SamplingArg,
    /// Rounding of fixed-point weight updates.
    #[arg(long, value_enum, default_value_t = RoundingArg::Stochastic)]
    update_rounding: RoundingArg,
    /// Leading noisy samples used for retraining; the rest are held out.
    #[arg(long, default_value_t = 2000)]
    retrain_samples: usize,
    /// Evaluation threads; never changes results.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

/// Tuned ES defaults for the desk-scale experiment. At N = 100 the folded
/// step `alpha / (N sigma)` is exactly 2^-8, so the fixed path's shift loses
/// nothing to rounding.
pub const DESK_SIGMA: f64 = 0.1;
pub const DESK_ALPHA: f64 = 0.0390625;

#[derive(Debug, Args)]
struct RetrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    es: EsArgs,
    /// Deployed model.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Standard deviation of the Gaussian input corruption.
    #[arg(long, default_value_t = 0.5)]
    sigma_noise: f64,
    /// ES seed; also seeds the corruption unless --noise-seed is given.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long, default_value = "float32", value_parser = parse_precision)]
    precision: Precision,
    /// Retrained checkpoint.
    #[arg(long, value_name = "FILE", required_unless_present = "suspend_at")]
    out: Option<PathBuf>,
    /// Per-iteration history CSV.
    #[arg(long, value_name = "FILE")]
    history: Option<PathBuf>,
    /// Stop after this many iterations and write the trainer state.
    #[arg(long, requires = "state_out")]
    suspend_at: Option<usize>,
    #[arg(long, value_name = "FILE")]
    state_out: Option<PathBuf>,
    /// Continue from a state written by --suspend-at.
    #[arg(long, value_name = "FILE")]
    resume_state: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    es: EsArgs,
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Seed-mean report CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Per-run CSV.
    #[arg(long, value_name = "FILE")]
    runs_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    noise_levels: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "float32,fixed16.12,fixed12.8", value_parser = parse_precision)]
    precisions: Vec<Precision>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Gaps,
    Block,
}

#[derive(Debug, Args)]
struct HwcostArgs {
    /// Forward-pass time in seconds.
    #[arg(long, default_value_t = 1e-6)]
    tf: f64,
    #[arg(long, default_value_t = 0.0)]
    tl: f64,
    #[arg(long, default_value_t = 0.0)]
    tg: f64,
    #[arg(long, default_value_t = 0.0)]
    tu: f64,
    /// Trainable weights.
    #[arg(long = "W", default_value_t = 157_000)]
    w: u64,
    /// Training blocks; a list gives one row each [default: 1,10,100,1000,2000].
    #[arg(long = "P", value_delimiter = ',')]
    p: Option<Vec<u64>>,
    /// Training images.
    #[arg(long = "M", default_value_t = 10_000)]
    m: u64,
    /// Population size.
    #[arg(long = "N", default_value_t = 100)]
    n: u64,
    /// Iterations.
    #[arg(long = "k", default_value_t = 100)]
    k: u64,
    /// Count the shared loss accumulator in the area.
    #[arg(long)]
    include_loss_acc: bool,
    #[arg(long, default_value_t = hwcost::KINTEX_ULTRASCALE.lut)]
    part_lut: u64,
    #[arg(long, default_value_t = hwcost::KINTEX_ULTRASCALE.ff)]
    part_ff: u64,
    /// Cost table CSV; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Inference arrival times in seconds, one per line.
    #[arg(long, value_name = "FILE")]
    arrivals: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Gaps)]
    policy: PolicyArg,
    /// Trace CSV; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    trace_out: Option<PathBuf>,
}

/// `float32`, `fixedB` (default split) or `fixedB.F`.
pub fn parse_precision(s: &str) -> Result<Precision, String> {
    let s = s.trim().to_ascii_lowercase();
    if matches!(s.as_str(), "float32" | "float" | "f32") {
        return Ok(Precision::Float32);
    }
    let rest = s
        .strip_prefix("fixed")
        .ok_or_else(|| format!("unknown precision '{s}' (float32, fixedB or fixedB.F)"))?;
    let num = |t: &str| t.parse::<u32>().map_err(|_| format!("bad precision '{s}'"));
    let p = match rest.split_once('.') {
        Some((b, f)) => Precision::fixed(num(b)?, num(f)?),
        None => Precision::default_fixed(num(rest)?),
    };
    p.map_err(|e| e.to_string())
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::StateMismatch(_) => CliError::Usage(e.to_string()),
            TrainError::Net(n) => n.into(),
            TrainError::Data(d) => d.into(),
            TrainError::Checkpoint(c) => c.into(),
            TrainError::Diverged(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<HwError> for CliError {
    fn from(e: HwError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::TrainBase(a) => cmd_train_base(a),
        Command::Retrain(a) => cmd_retrain(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Hwcost(a) => cmd_hwcost(a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
            }
            e.code()
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("{}: no such file", path.display())));
    }
    fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the manifest sidecar of every artifact.
fn write_manifests(command: &str, config: Value, inputs: Value, artifacts: &[&Path]) -> Result<(), CliError> {
    let outputs: Vec<String> = artifacts.iter().map(|p| p.display().to_string()).collect();
    let m = json!({
        "tool": "fpes",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    });
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    for a in artifacts {
        write_file(&manifest_path(a), text.as_bytes())?;
    }
    Ok(())
}

/// Resolved dataset: `(training, validation)` and a description.
fn load_data(d: &DataArgs) -> Result<(Dataset, Dataset, Value), CliError> {
    if d.synthetic {
        if d.full_res {
            return Err(CliError::Usage("--full-res needs MNIST data".into()));
        }
        let (train, val) = synthetic_desk(d.data_seed)?;
        return Ok((train, val, json!({"synthetic": true, "data_seed": d.data_seed})));
    }
    let dir = d.data.as_ref().ok_or_else(|| {
        CliError::Usage("no dataset: pass --data DIR, set FPES_DATA_DIR or use --synthetic".into())
    })?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{}: dataset directory not found", dir.display())));
    }
    let (train, test) = load_mnist_dir(dir)?;
    let (train, test) = if d.full_res {
        (train, test)
    } else {
        (pool_mnist(&train)?, pool_mnist(&test)?)
    };
    Ok((
        train,
        test,
        json!({"mnist_dir": dir.display().to_string(), "full_res": d.full_res}),
    ))
}

fn cmd_train_base(a: TrainBaseArgs) -> Result<(), CliError> {
    let (train, val, data_desc) = load_data(&a.data)?;
    let dims = a.dims.clone().unwrap_or_else(|| {
        if train.dim() == 64 {
            vec![64, 32, 16, train.num_classes()]
        } else {
            vec![train.dim(), 200, 100, train.num_classes()]
        }
    });
    let cfg = BaselineConfig {
        dims,
        epochs: a.epochs,
        learning_rate: a.lr,
        batch_size: a.batch,
        seed: a.seed,
    };
    let float_model = train_baseline(&train, &cfg)?;
    let model = match a.quantize {
        Precision::Float32 => float_model.clone(),
        Precision::Fixed(fmt) => quantize_model(&float_model, fmt)?,
    };
    let float_acc = evaluate_accuracy(&float_model, &val, Precision::Float32)?;
    let deployed_acc = evaluate_accuracy(&model, &val, Precision::Float32)?;
    save_checkpoint(&model, &a.out)?;
    println!(
        "baseline {:?}: validation accuracy float {:.4}, deployed ({}) {:.4}",
        cfg.dims, float_acc, a.quantize, deployed_acc
    );
    write_manifests(
        "train-base",
        json!({
            "dims": cfg.dims,
            "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate.to_string().parse::<f64>().unwrap_or(f64::NAN),
            "batch_size": cfg.batch_size,
            "seed": cfg.seed,
            "quantize": a.quantize.label(),
        }),
        json!({"data": data_desc}),
        &[&a.out],
    )
}

fn es_config(es: &EsArgs, precision: Precision, seed: u64) -> TrainConfig {
    TrainConfig {
        population: es.pop,
        iterations: es.iters,
        sigma: es.sigma,
        alpha: es.alpha,
        seed,
        mask: WeightMask::layer(es.layer),
        precision,
        loss_quantization: match es.loss_quant {
            LossQuantArg::Exact => LossQuantization::Exact,
            LossQuantArg::Po2 => LossQuantization::Po2,
        },
        noise: match es.noise {
            NoiseArg::Counter => NoiseSource::Counter,
            NoiseArg::LfsrClt => NoiseSource::Lfsr(LfsrMode::CltSum),
            NoiseArg::LfsrUniform => NoiseSource::Lfsr(LfsrMode::Uniform),
        },
        sampling: match es.sampling {
            SamplingArg::Mirrored => Sampling::Mirrored,
            SamplingArg::Independent => Sampling::Independent,
        },
        update_rounding: match es.update_rounding {
            RoundingArg::Stochastic => UpdateRounding::Stochastic,
            RoundingArg::Nearest => UpdateRounding::Nearest,
        },
        workers: es.workers,
    }
}

fn es_json(es: &EsArgs) -> Value {
    json!({
        "layer": es.layer,
        "population": es.pop,
        "iterations": es.iters,
        "sigma": es.sigma,
        "alpha": es.alpha,
        "loss_quantization": format!("{:?}", es.loss_quant).to_lowercase(),
        "noise": format!("{:?}", es.noise).to_lowercase(),
        "sampling": format!("{:?}", es.sampling).to_lowercase(),
        "update_rounding": format!("{:?}", es.update_rounding).to_lowercase(),
        "retrain_samples": es.retrain_samples,
    })
}

fn split_retrain(noisy: &Dataset, n: usize) -> Result<(Dataset, Dataset), CliError> {
    if n == 0 || n >= noisy.len() {
        return Err(CliError::Usage(format!(
            "--retrain-samples {n} must leave held-out data in a set of {}",
            noisy.len()
        )));
    }
    Ok((noisy.slice(0..n)?, noisy.slice(n..noisy.len())?))
}

pub const HISTORY_HEADER: &str = "t,mean_loss,forward_passes";

/// One row per iteration: index, mean population reward (negative MAE) and
/// cumulative forward passes.
pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from(HISTORY_HEADER);
    s.push('\n');
    let mut total = 0u64;
    for (t, r) in history.iter().enumerate() {
        total += r.forward_passes;
        let _ = writeln!(s, "{t},{:.10},{total}", r.mean_reward);
    }
    s
}

fn cmd_retrain(a: RetrainArgs) -> Result<(), CliError> {
    let model = load_checkpoint_arg(&a.checkpoint)?;
    let (_, val, data_desc) = load_data(&a.data)?;
    let noise_seed = a.noise_seed.unwrap_or(a.seed);
    let noisy = inject_noise(&val, a.sigma_noise, noise_seed)?;
    let (retrain, held_out) = split_retrain(&noisy, a.es.retrain_samples)?;
    let cfg = es_config(&a.es, a.precision, a.seed);
    cfg.validate()?;
    let objective = ModelObjective::new(&model, &retrain, &cfg.mask, cfg.precision)?;
    let mut trainer = match &a.resume_state {
        Some(p) => Trainer::resume(&objective, &read_file(p)?, &cfg)?,
        None => Trainer::new(&objective, cfg.clone(), objective.initial_weights())?,
    };
    let config = json!({
        "es": es_json(&a.es),
        "seed": a.seed,
        "noise_seed": noise_seed,
        "sigma_noise": a.sigma_noise,
        "precision": a.precision.label(),
    });
    let mut inputs = json!({
        "checkpoint": a.checkpoint.display().to_string(),
        "data": data_desc,
    });
    if let Some(p) = &a.resume_state {
        inputs["resume_state"] = json!(p.display().to_string());
    }

    if let Some(stop) = a.suspend_at {
        let state_out = a.state_out.as_ref().expect("clap enforces --state-out");
        trainer.run_until(stop)?;
        write_file(state_out, &trainer.suspend())?;
        println!("suspended after {} of {} iterations", trainer.state().iteration(), cfg.iterations);
        let mut outputs: Vec<&Path> = vec![state_out];
        if let Some(h) = &a.history {
            write_file(h, history_csv(trainer.state().history()).as_bytes())?;
            outputs.push(h);
        }
        return write_manifests("retrain", config, inputs, &outputs);
    }

    trainer.run()?;
    let state = trainer.into_state();
    let trained = objective.materialize(state.weights())?;
    let pre = evaluate_accuracy(&model, &held_out, a.precision)?;
    let post = evaluate_accuracy(&trained, &held_out, a.precision)?;
    let out = a.out.as_ref().expect("clap enforces --out");
    save_checkpoint(&trained, out)?;
    let mut outputs: Vec<&Path> = vec![out];
    if let Some(h) = &a.history {
        write_file(h, history_csv(state.history()).as_bytes())?;
        outputs.push(h);
    }
    if let Some(s) = &a.state_out {
        write_file(s, &state.encode())?;
        outputs.push(s);
    }
    println!(
        "held-out accuracy {:.4} -> {:.4} ({} forward passes)",
        pre,
        post,
        state.forward_passes()
    );
    write_manifests("retrain", config, inputs, &outputs)
}

fn load_checkpoint_arg(path: &Path) -> Result<Model, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("{}: no such checkpoint", path.display())));
    }
    Ok(load_checkpoint(path)?)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let model = load_checkpoint_arg(&a.checkpoint)?;
    let (_, val, data_desc) = load_data(&a.data)?;
    let cfg = ExperimentConfig {
        noise_levels: a.noise_levels.clone(),
        precisions: a.precisions.clone(),
        seeds: a.seeds.clone(),
        retrain_samples: a.es.retrain_samples,
        es: es_config(&a.es, Precision::Float32, 0),
    };
    let report = run_recovery_experiment_with(&model, &val, &cfg, |r| {
        eprintln!(
            "noise {} {} seed {}: {:.4} -> {:.4}",
            r.noise_sigma, r.precision, r.seed, r.pre_accuracy, r.post_accuracy
        );
    })?;
    write_file(&a.out, report.to_csv().as_bytes())?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    if let Some(p) = &a.runs_out {
        write_file(p, report.runs_csv().as_bytes())?;
        outputs.push(p);
    }
    eprintln!("{} runs in {:.1?}", report.runs.len(), report.wall_clock);
    write_manifests(
        "experiment",
        json!({
            "es": es_json(&a.es),
            "noise_levels": a.noise_levels,
            "precisions": a.precisions.iter().map(|p| p.label()).collect::<Vec<_>>(),
            "seeds": a.seeds,
        }),
        json!({"checkpoint": a.checkpoint.display().to_string(), "data": data_desc}),
        &outputs,
    )
}

/// Arrival times in seconds, one per line; blank lines and `#` comments
/// are skipped.
pub fn parse_arrivals(text: &str) -> Result<Vec<f64>, String> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            l.parse::<f64>()
                .map_err(|_| format!("line {}: '{l}' is not a time in seconds", n + 1))
        })
        .collect()
}

fn cmd_hwcost(a: HwcostArgs) -> Result<(), CliError> {
    let blocks = a.p.clone().unwrap_or_else(|| hwcost::SWEEP_BLOCKS.to_vec());
    if blocks.is_empty() {
        return Err(CliError::Usage("--P needs at least one value".into()));
    }
    let base = HwParams::from_seconds(a.tf, a.tl, a.tg, a.tu, a.w, blocks[0], a.m, a.n, a.k)?;
    let part = Part {
        lut: a.part_lut,
        ff: a.part_ff,
    };
    let rows = hwcost::sweep(&base, &blocks, part, a.include_loss_acc)?;
    let table = hwcost::sweep_csv(&base, &rows);
    let config = json!({
        "tf": a.tf, "tl": a.tl, "tg": a.tg, "tu": a.tu,
        "W": a.w, "P": blocks, "M": a.m, "N": a.n, "k": a.k,
        "include_loss_acc": a.include_loss_acc,
        "part": {"lut": part.lut, "ff": part.ff},
        "policy": format!("{:?}", a.policy).to_lowercase(),
    });

    let trace = match &a.arrivals {
        None => None,
        Some(path) => {
            if blocks.len() != 1 && a.p.is_some() {
                return Err(CliError::Usage("--arrivals needs a single --P".into()));
            }
            let job = HwParams {
                p: a.p.as_ref().map_or(a.w, |_| blocks[0]),
                ..base
            };
            let text = String::from_utf8(read_file(path)?)
                .map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))?;
            let arrivals = parse_arrivals(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))?;
            let policy = match a.policy {
                PolicyArg::Gaps => Policy::TrainInGaps,
                PolicyArg::Block => Policy::BlockUntilDone,
            };
            Some(hwcost::simulate_interleave(&arrivals, &job, policy)?)
        }
    };

    let inputs = json!({"arrivals": a.arrivals.as_ref().map(|p| p.display().to_string())});
    let mut outputs: Vec<&Path> = Vec::new();
    match &a.out {
        Some(p) => {
            write_file(p, table.as_bytes())?;
            outputs.push(p);
        }
        None if trace.is_none() || a.trace_out.is_some() => print!("{table}"),
        None => {}
    }
    if let Some(t) = &trace {
        let csv = t.to_csv();
        match &a.trace_out {
            Some(p) => {
                write_file(p, csv.as_bytes())?;
                outputs.push(p);
            }
            None => print!("{csv}"),
        }
    }
    if outputs.is_empty() {
        return Ok(());
    }
    write_manifests("hwcost", config, inputs, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_strings() {
        assert_eq!(parse_precision("float32"), Ok(Precision::Float32));
        assert_eq!(parse_precision("fixed12.8"), Ok(Precision::fixed(12, 8).unwrap()));
        assert_eq!(parse_precision("fixed16"), Ok(Precision::default_fixed(16).unwrap()));
        assert!(parse_precision("fixed").is_err());
        assert!(parse_precision("int8").is_err());
        for p in ["float32", "fixed16.12", "fixed4.3"] {
            assert_eq!(parse_precision(p).unwrap().label(), p);
        }
    }

    #[test]
    fn arrivals_format() {
        assert_eq!(parse_arrivals("# t\n0.5\n\n1e-3\n"), Ok(vec![0.5, 1e-3]));
        assert!(parse_arrivals("x").is_err());
    }

    #[test]
    fn history_is_cumulative() {
        let h = [
            IterationRecord {
                mean_reward: -0.5,
                forward_passes: 10,
            },
            IterationRecord {
                mean_reward: -0.25,
                forward_passes: 10,
            },
        ];
        assert_eq!(
            history_csv(&h),
            "t,mean_loss,forward_passes\n0,-0.5000000000,10\n1,-0.2500000000,20\n"
        );
    }
}
