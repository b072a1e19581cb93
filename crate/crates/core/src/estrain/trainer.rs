use rayon::prelude::*;
use rayon::ThreadPool;

use crate::bench::Dataset;
use crate::error::TrainError;
use crate::fxp::quantize;
use crate::noise::{lfsr_noise, LfsrState, NoiseStream};
use crate::qnet::{Model, Precision};

use super::objective::{ModelObjective, Objective};
use super::state::{IterationRecord, TrainerState};
use super::{
    estimate_gradient, perturb, update_weights, update_weights_stochastic, Epsilons, NoiseSource, Reward, Sampling,
    TrainConfig, UpdateRounding, Weights,
};

/// Domain tags separating perturbation draws and rounding dither from other
/// uses of a seed.
const PERTURBATION_DOMAIN: u64 = 0x0e5_7a1d;
const ROUNDING_DOMAIN: u64 = 0x0d1_7e12;

/// Iterates the ES update against one objective. The iteration is the unit
/// of work: state can be suspended between iterations only.
pub struct Trainer<'o, O: Objective + ?Sized> {
    objective: &'o O,
    state: TrainerState,
    stream: NoiseStream,
    dither: NoiseStream,
    pool: Option<ThreadPool>,
}

impl<O: Objective + ?Sized> std::fmt::Debug for Trainer<'_, O> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trainer").field("state", &self.state).finish_non_exhaustive()
    }
}

impl<'o, O: Objective + ?Sized> Trainer<'o, O> {
    pub fn new(objective: &'o O, cfg: TrainConfig, initial: Weights) -> Result<Self, TrainError> {
        cfg.validate()?;
        check_weights(objective, &cfg, &initial)?;
        Self::from_state(
            objective,
            TrainerState {
                config: cfg,
                t: 0,
                weights: initial,
                forward_passes: 0,
                history: Vec::new(),
            },
        )
    }

    /// Continues from a suspended blob. `cfg` must match the configuration
    /// the blob was written with, except for `workers`.
    pub fn resume(objective: &'o O, blob: &[u8], cfg: &TrainConfig) -> Result<Self, TrainError> {
        let state = TrainerState::decode(blob, cfg.workers)?;
        if state.config != *cfg {
            return Err(TrainError::StateMismatch(config_diff(&state.config, cfg)));
        }
        check_weights(objective, cfg, &state.weights)?;
        Self::from_state(objective, state)
    }

    fn from_state(objective: &'o O, state: TrainerState) -> Result<Self, TrainError> {
        let pool = match state.config.workers {
            1 => None,
            n => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| TrainError::Config(format!("worker pool: {e}")))?,
            ),
        };
        Ok(Self {
            objective,
            stream: NoiseStream::new(state.config.seed).derive(PERTURBATION_DOMAIN),
            dither: NoiseStream::new(state.config.seed).derive(ROUNDING_DOMAIN),
            state,
            pool,
        })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn into_state(self) -> TrainerState {
        self.state
    }

    pub fn weights(&self) -> &Weights {
        &self.state.weights
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.state.config.iterations
    }

    /// Serialized state; resuming from it continues bit-identically.
    pub fn suspend(&self) -> Vec<u8> {
        self.state.encode()
    }

    /// Perturbations of iteration `t`.
    pub fn sample(&self, t: usize) -> Epsilons {
        let cfg = &self.state.config;
        let w = self.state.weights.len();
        let n = cfg.population;
        let stream = self.stream;
        // member i draws at its own index, or mirrors member i - 1
        let mirrored = cfg.sampling == Sampling::Mirrored;
        let source = move |i: usize| if mirrored && i % 2 == 1 { (i - 1, true) } else { (i, false) };
        match cfg.precision {
            Precision::Float32 => Epsilons::Float(self.map_members(n, |i| {
                let (s, neg) = source(i);
                let v = stream.normal_vec(t as u64, s as u64, w);
                if neg {
                    v.into_iter().map(|x| -x).collect()
                } else {
                    v
                }
            })),
            Precision::Fixed(fmt) => {
                let values = self.map_members(n, |i| {
                    let (s, neg) = source(i);
                    let m: Vec<i32> = match cfg.noise {
                        NoiseSource::Counter => stream
                            .normal_vec(t as u64, s as u64, w)
                            .into_iter()
                            .map(|x| quantize(x, fmt).mantissa() as i32)
                            .collect(),
                        NoiseSource::Lfsr(mode) => {
                            let mut st = LfsrState::from_seed(stream.bits(t as u64, s as u64));
                            (0..w)
                                .map(|_| {
                                    let (x, next) = lfsr_noise(st, fmt, mode);
                                    st = next;
                                    x.mantissa() as i32
                                })
                                .collect()
                        }
                    };
                    if neg {
                        m.into_iter().map(|x| fmt.saturate(-i64::from(x)) as i32).collect()
                    } else {
                        m
                    }
                });
                Epsilons::Fixed { fmt, values }
            }
        }
    }

    fn map_members<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }

    /// Runs one iteration with freshly drawn perturbations.
    pub fn step(&mut self) -> Result<IterationRecord, TrainError> {
        let eps = self.sample(self.state.t);
        self.step_with(&eps)
    }

    /// Runs one iteration with the given perturbations.
    pub fn step_with(&mut self, eps: &Epsilons) -> Result<IterationRecord, TrainError> {
        if self.is_done() {
            return Err(TrainError::Config(format!(
                "all {} iterations already done",
                self.state.config.iterations
            )));
        }
        let cfg = &self.state.config;
        let before = self.objective.forward_passes();
        let losses = self.evaluate(eps)?;
        let passes = self.objective.forward_passes() - before;
        let g = estimate_gradient(eps, &losses, cfg.sigma, cfg.loss_quantization)?;
        let next = match cfg.update_rounding {
            UpdateRounding::Nearest => update_weights(&self.state.weights, &g, cfg.alpha)?,
            UpdateRounding::Stochastic => {
                let (dither, t) = (self.dither, self.state.t as u64);
                update_weights_stochastic(&self.state.weights, &g, cfg.alpha, &|j| dither.bits(t, j as u64))?
            }
        };
        let mean = losses.iter().map(|l| l.to_f64()).sum::<f64>() / losses.len() as f64;
        if !mean.is_finite() || next.to_f64().iter().any(|x| !x.is_finite()) {
            return Err(TrainError::Diverged(format!("iteration {}", self.state.t)));
        }
        let rec = IterationRecord {
            mean_reward: mean,
            forward_passes: passes,
        };
        self.state.weights = next;
        self.state.t += 1;
        self.state.forward_passes += passes;
        self.state.history.push(rec);
        Ok(rec)
    }

    fn evaluate(&self, eps: &Epsilons) -> Result<Vec<Reward>, TrainError> {
        let sigma = self.state.config.sigma;
        let omega = &self.state.weights;
        let obj = self.objective;
        self.map_members(eps.population(), |i| obj.reward(&perturb(omega, eps, i, sigma)?))
            .into_iter()
            .collect()
    }

    /// Runs the remaining iterations.
    pub fn run(&mut self) -> Result<(), TrainError> {
        self.run_until(self.state.config.iterations)
    }

    /// Runs until `t` iterations are complete (or all of them).
    pub fn run_until(&mut self, t: usize) -> Result<(), TrainError> {
        while self.state.t < t.min(self.state.config.iterations) {
            self.step()?;
        }
        Ok(())
    }
}

/// Losses of `omega + sigma * eps_i` for every member, in member order.
pub fn evaluate_population<O: Objective + ?Sized>(
    objective: &O,
    omega: &Weights,
    eps: &Epsilons,
    sigma: f64,
) -> Result<Vec<Reward>, TrainError> {
    (0..eps.population())
        .map(|i| objective.reward(&perturb(omega, eps, i, sigma)?))
        .collect()
}

fn check_weights<O: Objective + ?Sized>(objective: &O, cfg: &TrainConfig, w: &Weights) -> Result<(), TrainError> {
    if w.len() != objective.dim() {
        return Err(TrainError::StateMismatch(format!(
            "{} weights for an objective of dimension {}",
            w.len(),
            objective.dim()
        )));
    }
    let ok = match (cfg.precision, w) {
        (Precision::Float32, Weights::Float(_)) => true,
        (Precision::Fixed(p), Weights::Fixed { fmt, .. }) => p == *fmt,
        _ => false,
    };
    if !ok {
        return Err(TrainError::StateMismatch(format!(
            "weights are not in the {} representation",
            cfg.precision
        )));
    }
    Ok(())
}

fn config_diff(stored: &TrainConfig, given: &TrainConfig) -> String {
    let mut d = Vec::new();
    if stored.population != given.population {
        d.push(format!("population {} vs {}", stored.population, given.population));
    }
    if stored.iterations != given.iterations {
        d.push(format!("iterations {} vs {}", stored.iterations, given.iterations));
    }
    if stored.sigma.to_bits() != given.sigma.to_bits() {
        d.push(format!("sigma {} vs {}", stored.sigma, given.sigma));
    }
    if stored.alpha.to_bits() != given.alpha.to_bits() {
        d.push(format!("alpha {} vs {}", stored.alpha, given.alpha));
    }
    if stored.seed != given.seed {
        d.push(format!("seed {} vs {}", stored.seed, given.seed));
    }
    if stored.mask != given.mask {
        d.push("mask".into());
    }
    if stored.precision != given.precision {
        d.push(format!("precision {} vs {}", stored.precision, given.precision));
    }
    if stored.loss_quantization != given.loss_quantization {
        d.push("loss quantization".into());
    }
    if stored.noise != given.noise {
        d.push("noise source".into());
    }
    if stored.sampling != given.sampling {
        d.push("sampling".into());
    }
    if stored.update_rounding != given.update_rounding {
        d.push("update rounding".into());
    }
    format!("state was written for a different run: {}", d.join(", "))
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<IterationRecord>,
    pub forward_passes: u64,
}

/// Retrains the masked entries of `model` on `data` for `cfg.iterations`
/// iterations.
pub fn train(model: &Model, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let objective = ModelObjective::new(model, data, &cfg.mask, cfg.precision)?;
    let mut trainer = Trainer::new(&objective, cfg.clone(), objective.initial_weights())?;
    trainer.run()?;
    let state = trainer.into_state();
    Ok(TrainOutcome {
        model: objective.materialize(&state.weights)?,
        history: state.history,
        forward_passes: state.forward_passes,
    })
}
