//! Noise-recovery experiment and its CSV report.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{NetError, TrainError};
use crate::estrain::{train, TrainConfig};
use crate::qnet::{Model, PlanOutput, Precision};

use super::{inject_noise, Dataset};

/// Fraction of samples whose prediction under `precision` equals the label.
pub fn evaluate_accuracy(model: &Model, data: &Dataset, precision: Precision) -> Result<f64, NetError> {
    let plan = model.view().plan(precision)?;
    let mut correct = 0usize;
    for (x, y) in data.samples() {
        let out = plan.run(&plan.prepare(x)?);
        let pred = match &out {
            PlanOutput::Float(v) => argmax_by(v.len(), |a, b| v[a] > v[b]),
            PlanOutput::Fixed(v) => argmax_by(v.len(), |a, b| v[a] > v[b]),
        };
        correct += usize::from(pred == y);
    }
    Ok(correct as f64 / data.len() as f64)
}

fn argmax_by(n: usize, greater: impl Fn(usize, usize) -> bool) -> usize {
    (1..n).fold(0, |best, k| if greater(k, best) { k } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Input-noise levels to corrupt the validation set with.
    pub noise_levels: Vec<f64>,
    pub precisions: Vec<Precision>,
    /// One noise realization and one ES seed per entry.
    pub seeds: Vec<u64>,
    /// Leading noisy samples used for retraining; the rest are held out
    /// for accuracy.
    pub retrain_samples: usize,
    /// ES settings; `precision` and `seed` are overridden per run.
    pub es: TrainConfig,
}

impl ExperimentConfig {
    pub fn desk(es: TrainConfig) -> Self {
        Self {
            noise_levels: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            precisions: vec![
                Precision::Float32,
                Precision::fixed(16, 12).expect("static format"),
                Precision::fixed(12, 8).expect("static format"),
            ],
            seeds: vec![1, 2, 3, 4, 5],
            retrain_samples: 2000,
            es,
        }
    }
}

/// One (noise level, precision, seed) retraining run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub noise_sigma: f64,
    pub precision: Precision,
    pub seed: u64,
    pub pre_accuracy: f64,
    pub post_accuracy: f64,
    pub first_reward: f64,
    pub last_reward: f64,
    pub forward_passes: u64,
}

/// Seed means for one (noise level, precision) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub noise_sigma: f64,
    pub precision: Precision,
    pub seeds: usize,
    pub pre_accuracy: f64,
    pub post_accuracy: f64,
    pub first_reward: f64,
    pub last_reward: f64,
    pub forward_passes_per_run: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunResult>,
    pub rows: Vec<ReportRow>,
    pub retrain_samples: usize,
    pub eval_samples: usize,
    pub population: usize,
    pub iterations: usize,
    /// Not part of the CSV output, which must be reproducible.
    pub wall_clock: Duration,
}

pub const REPORT_HEADER: &str = "noise_sigma,precision,seeds,pre_accuracy,post_accuracy,delta,first_reward,last_reward,forward_passes_per_run,retrain_samples,eval_samples,population,iterations";
pub const RUNS_HEADER: &str = "noise_sigma,precision,seed,pre_accuracy,post_accuracy,first_reward,last_reward,forward_passes";

impl ExperimentReport {
    pub fn row(&self, noise_sigma: f64, precision: Precision) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.noise_sigma == noise_sigma && r.precision == precision)
    }

    /// Seed-mean rows, one per (noise level, precision).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.8},{:.8},{},{},{},{},{}",
                r.noise_sigma,
                r.precision,
                r.seeds,
                r.pre_accuracy,
                r.post_accuracy,
                r.post_accuracy - r.pre_accuracy,
                r.first_reward,
                r.last_reward,
                r.forward_passes_per_run,
                self.retrain_samples,
                self.eval_samples,
                self.population,
                self.iterations
            );
        }
        s
    }

    /// Every individual run.
    pub fn runs_csv(&self) -> String {
        let mut s = String::from(RUNS_HEADER);
        s.push('\n');
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.8},{:.8},{}",
                r.noise_sigma, r.precision, r.seed, r.pre_accuracy, r.post_accuracy, r.first_reward, r.last_reward, r.forward_passes
            );
        }
        s
    }
}

/// Corrupts `validation` at every noise level, retrains the masked layer on
/// the leading `retrain_samples` noisy samples and measures accuracy on the
/// remaining noisy samples before and after, for every precision and seed.
pub fn run_recovery_experiment(
    model: &Model,
    validation: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, TrainError> {
    run_recovery_experiment_with(model, validation, cfg, |_| {})
}

/// As [`run_recovery_experiment`], calling `progress` after each run.
pub fn run_recovery_experiment_with(
    model: &Model,
    validation: &Dataset,
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&RunResult),
) -> Result<ExperimentReport, TrainError> {
    let started = Instant::now();
    if cfg.noise_levels.is_empty() || cfg.precisions.is_empty() || cfg.seeds.is_empty() {
        return Err(TrainError::Config("noise levels, precisions and seeds must be non-empty".into()));
    }
    if cfg.retrain_samples == 0 || cfg.retrain_samples >= validation.len() {
        return Err(TrainError::Config(format!(
            "retrain samples {} must leave held-out data in a set of {}",
            cfg.retrain_samples,
            validation.len()
        )));
    }
    let mut runs = Vec::new();
    for &noise in &cfg.noise_levels {
        for &precision in &cfg.precisions {
            for &seed in &cfg.seeds {
                let noisy = inject_noise(validation, noise, seed)?;
                let retrain = noisy.slice(0..cfg.retrain_samples)?;
                let held_out = noisy.slice(cfg.retrain_samples..noisy.len())?;
                let pre = evaluate_accuracy(model, &held_out, precision)?;
                let es = TrainConfig {
                    precision,
                    seed,
                    ..cfg.es.clone()
                };
                let out = train(model, &retrain, &es)?;
                let post = evaluate_accuracy(&out.model, &held_out, precision)?;
                let run = RunResult {
                    noise_sigma: noise,
                    precision,
                    seed,
                    pre_accuracy: pre,
                    post_accuracy: post,
                    first_reward: out.history[0].mean_reward,
                    last_reward: out.history[out.history.len() - 1].mean_reward,
                    forward_passes: out.forward_passes,
                };
                progress(&run);
                runs.push(run);
            }
        }
    }
    let rows = summarize(&runs);
    Ok(ExperimentReport {
        runs,
        rows,
        retrain_samples: cfg.retrain_samples,
        eval_samples: validation.len() - cfg.retrain_samples,
        population: cfg.es.population,
        iterations: cfg.es.iterations,
        wall_clock: started.elapsed(),
    })
}

/// Seed means per (noise level, precision), in first-appearance order.
pub fn summarize(runs: &[RunResult]) -> Vec<ReportRow> {
    let mut keys: Vec<(f64, Precision)> = Vec::new();
    for r in runs {
        if !keys.iter().any(|&(s, p)| s == r.noise_sigma && p == r.precision) {
            keys.push((r.noise_sigma, r.precision));
        }
    }
    keys.into_iter()
        .map(|(s, p)| {
            let group: Vec<&RunResult> = runs.iter().filter(|r| r.noise_sigma == s && r.precision == p).collect();
            let n = group.len() as f64;
            let mean = |f: fn(&RunResult) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            ReportRow {
                noise_sigma: s,
                precision: p,
                seeds: group.len(),
                pre_accuracy: mean(|r| r.pre_accuracy),
                post_accuracy: mean(|r| r.post_accuracy),
                first_reward: mean(|r| r.first_reward),
                last_reward: mean(|r| r.last_reward),
                forward_passes_per_run: group[0].forward_passes,
            }
        })
        .collect()
}
