//! Analytical hardware model of the training datapath.
//!
//! Times are held as exact rationals of picoseconds, so the closed-form
//! training-time estimates carry no rounding error before conversion to
//! seconds. The serialization factor `W / P` is kept exact and also
//! reported rounded up for block counts that do not divide `W`.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::HwError;

/// Picoseconds per second.
pub const PS_PER_S: u128 = 1_000_000_000_000;

/// LUT/FF counts of the reference Kintex UltraScale part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Part {
    pub lut: u64,
    pub ff: u64,
}

pub const KINTEX_ULTRASCALE: Part = Part {
    lut: 203_128,
    ff: 406_256,
};

/// Cost of one training block.
pub const BLOCK_LUT: u64 = 91;
pub const BLOCK_FF: u64 = 68;
/// Cost of the shared loss accumulator.
pub const LOSS_ACC_LUT: u64 = 9;
pub const LOSS_ACC_FF: u64 = 37;

/// Rounds seconds to whole picoseconds.
pub fn seconds_to_ps(s: f64) -> Result<u128, HwError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(HwError::Params(format!("time {s} must be finite and >= 0")));
    }
    Ok((s * PS_PER_S as f64).round() as u128)
}

pub fn ps_to_seconds(ps: Ratio<u128>) -> f64 {
    // numerator / denominator first so that whole picosecond counts divide once
    if *ps.denom() == 1 {
        *ps.numer() as f64 / PS_PER_S as f64
    } else {
        (*ps.numer() as f64 / *ps.denom() as f64) / PS_PER_S as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HwParams {
    /// Forward, loss, gradient and update stage times in picoseconds.
    pub t_f: u128,
    pub t_l: u128,
    pub t_g: u128,
    pub t_u: u128,
    /// Trainable weights.
    pub w: u64,
    /// Training blocks.
    pub p: u64,
    /// Training images.
    pub m: u64,
    /// Population size.
    pub n: u64,
    /// Iterations.
    pub k: u64,
}

impl HwParams {
    /// The headline configuration: `t_f` = 1 us, one block per weight of a
    /// 784x200 layer, 10,000 images, N = k = 100.
    pub fn reference() -> Self {
        Self {
            t_f: 1_000_000,
            t_l: 0,
            t_g: 0,
            t_u: 0,
            w: 157_000,
            p: 157_000,
            m: 10_000,
            n: 100,
            k: 100,
        }
    }

    /// Stage times given in seconds.
    #[allow(clippy::too_many_arguments)]
    pub fn from_seconds(
        t_f: f64,
        t_l: f64,
        t_g: f64,
        t_u: f64,
        w: u64,
        p: u64,
        m: u64,
        n: u64,
        k: u64,
    ) -> Result<Self, HwError> {
        let p = Self {
            t_f: seconds_to_ps(t_f)?,
            t_l: seconds_to_ps(t_l)?,
            t_g: seconds_to_ps(t_g)?,
            t_u: seconds_to_ps(t_u)?,
            w,
            p,
            m,
            n,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HwError> {
        let bad = |m: &str| Err(HwError::Params(m.to_string()));
        if self.t_f == 0 {
            return bad("t_f must be positive");
        }
        if self.w == 0 || self.p == 0 || self.m == 0 || self.n == 0 || self.k == 0 {
            return bad("W, P, M, N and k must be positive");
        }
        if self.p > self.w {
            return bad("P must not exceed W");
        }
        Ok(())
    }

    /// `W / P`, exact.
    pub fn serialization(&self) -> Ratio<u128> {
        Ratio::new(u128::from(self.w), u128::from(self.p))
    }

    /// `ceil(W / P)`: passes a block actually has to make.
    pub fn serialization_ceil(&self) -> u128 {
        self.serialization().ceil().to_integer()
    }

    /// Training forward passes per iteration per image, `(W / P) N`.
    pub fn passes_per_iteration_per_image(&self) -> Ratio<u128> {
        self.serialization() * u128::from(self.n)
    }

    /// Training forward passes of a whole run, `(W / P) M N k`.
    pub fn total_passes(&self) -> Ratio<u128> {
        self.passes_per_iteration_per_image() * u128::from(self.m) * u128::from(self.k)
    }
}

/// A time both with exact `W / P` and with `W / P` rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeEstimate {
    pub exact_ps: Ratio<u128>,
    pub ceil_ps: u128,
}

impl TimeEstimate {
    pub fn seconds(&self) -> f64 {
        ps_to_seconds(self.exact_ps)
    }

    pub fn ceil_seconds(&self) -> f64 {
        ps_to_seconds(Ratio::from_integer(self.ceil_ps))
    }
}

/// Time of one iteration on one image: `(t_f + t_l + t_g + t_u) (W / P) N`.
pub fn iteration_time(p: &HwParams) -> Result<TimeEstimate, HwError> {
    p.validate()?;
    let stage = p.t_f + p.t_l + p.t_g + p.t_u;
    let n = u128::from(p.n);
    Ok(TimeEstimate {
        exact_ps: p.serialization() * stage * n,
        ceil_ps: p.serialization_ceil() * stage * n,
    })
}

/// Time of a whole run counting forward passes only: `t_f (W / P) M N k`.
pub fn total_training_time(p: &HwParams) -> Result<TimeEstimate, HwError> {
    p.validate()?;
    let mnk = u128::from(p.m) * u128::from(p.n) * u128::from(p.k);
    Ok(TimeEstimate {
        exact_ps: p.serialization() * p.t_f * mnk,
        ceil_ps: p.serialization_ceil() * p.t_f * mnk,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaReport {
    pub lut: u64,
    pub ff: u64,
    pub lut_pct: f64,
    pub ff_pct: f64,
    pub part: Part,
}

/// Area of `P` training blocks, optionally with the loss accumulator.
pub fn area_overhead(p: u64, include_loss_accumulator: bool) -> Result<AreaReport, HwError> {
    area_overhead_on(p, include_loss_accumulator, KINTEX_ULTRASCALE)
}

pub fn area_overhead_on(p: u64, include_loss_accumulator: bool, part: Part) -> Result<AreaReport, HwError> {
    if p == 0 {
        return Err(HwError::Params("P must be positive".into()));
    }
    if part.lut == 0 || part.ff == 0 {
        return Err(HwError::Params("part resource counts must be positive".into()));
    }
    let extra = u64::from(include_loss_accumulator);
    let lut = BLOCK_LUT * p + LOSS_ACC_LUT * extra;
    let ff = BLOCK_FF * p + LOSS_ACC_FF * extra;
    Ok(AreaReport {
        lut,
        ff,
        lut_pct: pct(lut, part.lut),
        ff_pct: pct(ff, part.ff),
        part,
    })
}

fn pct(count: u64, available: u64) -> f64 {
    100.0 * count as f64 / available as f64
}

/// Percentage in table style: rounded to `decimals` places, with nonzero
/// values below one unit in the last place shown as that unit.
pub fn display_pct(value: f64, decimals: usize) -> String {
    let unit = 10f64.powi(-(decimals as i32));
    let shown = if value > 0.0 && value < unit { unit } else { value };
    format!("{shown:.decimals$}")
}

/// One row of the block-count sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: u64,
    pub passes_per_iteration_per_image: Ratio<u128>,
    /// Passes with `W / P` rounded up.
    pub passes_ceil: u128,
    pub iteration_time: TimeEstimate,
    pub total_time: TimeEstimate,
    pub area: AreaReport,
}

/// The block counts of the published sweep.
pub const SWEEP_BLOCKS: [u64; 5] = [1, 10, 100, 1000, 2000];

/// Training cost and area for each block count, other parameters from `base`.
pub fn sweep(base: &HwParams, blocks: &[u64], part: Part, include_loss_accumulator: bool) -> Result<Vec<SweepRow>, HwError> {
    blocks
        .iter()
        .map(|&p| {
            let hp = HwParams { p, ..*base };
            hp.validate()?;
            Ok(SweepRow {
                p,
                passes_per_iteration_per_image: hp.passes_per_iteration_per_image(),
                passes_ceil: hp.serialization_ceil() * u128::from(hp.n),
                iteration_time: iteration_time(&hp)?,
                total_time: total_training_time(&hp)?,
                area: area_overhead_on(p, include_loss_accumulator, part)?,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "P,W,N,passes_per_iteration_per_image,passes_ceil,iteration_time_s,iteration_time_ceil_s,total_time_s,total_time_ceil_s,lut,ff,lut_pct,ff_pct";

fn ratio_str(r: Ratio<u128>) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn sweep_csv(base: &HwParams, rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            r.p,
            base.w,
            base.n,
            ratio_str(r.passes_per_iteration_per_image),
            r.passes_ceil,
            r.iteration_time.seconds(),
            r.iteration_time.ceil_seconds(),
            r.total_time.seconds(),
            r.total_time.ceil_seconds(),
            r.area.lut,
            r.area.ff,
            r.area.lut_pct,
            r.area.ff_pct
        );
    }
    s
}

/// How training shares the datapath with inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Train to completion, then serve queued inference.
    BlockUntilDone,
    /// Inference first; training fills idle time in atomic forward passes.
    TrainInGaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Inference,
    TrainEval,
    TrainUpdate,
    Pause,
    Resume,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Inference => "inference",
            EventKind::TrainEval => "train_eval",
            EventKind::TrainUpdate => "train_update",
            EventKind::Pause => "pause",
            EventKind::Resume => "resume",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub start_ps: u128,
    pub duration_ps: u128,
    /// Training forward passes completed at the end of the event.
    pub progress: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    /// Training forward passes of the job.
    pub total_units: u128,
}

impl Trace {
    /// End of the last event.
    pub fn end_ps(&self) -> u128 {
        self.events.iter().map(|e| e.start_ps + e.duration_ps).max().unwrap_or(0)
    }

    /// End of the last training event.
    pub fn training_done_ps(&self) -> u128 {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::TrainEval | EventKind::TrainUpdate))
            .map(|e| e.start_ps + e.duration_ps)
            .max()
            .unwrap_or(0)
    }

    pub fn duration_of(&self, kind: EventKind) -> u128 {
        self.events.iter().filter(|e| e.kind == kind).map(|e| e.duration_ps).sum()
    }

    pub fn progress(&self) -> u128 {
        self.events.last().map_or(0, |e| e.progress)
    }

    /// Inference events in service order.
    pub fn inferences(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Inference)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,start_s,duration_s,progress\n");
        for e in &self.events {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                e.kind.as_str(),
                ps_to_seconds(Ratio::from_integer(e.start_ps)),
                ps_to_seconds(Ratio::from_integer(e.duration_ps)),
                e.progress
            );
        }
        s
    }
}

/// Remaining training work: whole iterations of forward passes, each
/// followed by one update when loss, gradient and update stages cost time.
struct Work {
    t_f: u128,
    units_per_iter: u128,
    update_ps: u128,
    iterations: u64,
    iter: u64,
    units_in_iter: u128,
    done_units: u128,
}

impl Work {
    fn finished(&self) -> bool {
        self.iter >= self.iterations
    }

    /// Runs atomic pieces starting at `now` while they start before
    /// `deadline`; returns the new time.
    fn run(&mut self, mut now: u128, deadline: Option<u128>, events: &mut Vec<Event>) -> u128 {
        while !self.finished() && deadline.map_or(true, |d| now < d) {
            if self.units_in_iter < self.units_per_iter {
                let left = self.units_per_iter - self.units_in_iter;
                let n = match deadline {
                    None => left,
                    Some(d) => left.min((d - now).div_ceil(self.t_f)),
                };
                let dur = n * self.t_f;
                self.units_in_iter += n;
                self.done_units += n;
                push_merged(events, EventKind::TrainEval, now, dur, self.done_units);
                now += dur;
            } else {
                if self.update_ps > 0 {
                    events.push(Event {
                        kind: EventKind::TrainUpdate,
                        start_ps: now,
                        duration_ps: self.update_ps,
                        progress: self.done_units,
                    });
                    now += self.update_ps;
                }
                self.iter += 1;
                self.units_in_iter = 0;
            }
        }
        now
    }
}

fn push_merged(events: &mut Vec<Event>, kind: EventKind, start: u128, dur: u128, progress: u128) {
    if let Some(last) = events.last_mut() {
        if last.kind == kind && last.start_ps + last.duration_ps == start {
            last.duration_ps += dur;
            last.progress = progress;
            return;
        }
    }
    events.push(Event {
        kind,
        start_ps: start,
        duration_ps: dur,
        progress,
    });
}

/// Interleaves a training job with inference requests arriving at the given
/// times (seconds). Each inference occupies the datapath for one forward
/// pass.
pub fn simulate_interleave(arrivals: &[f64], job: &HwParams, policy: Policy) -> Result<Trace, HwError> {
    let ps = arrivals
        .iter()
        .map(|&a| seconds_to_ps(a))
        .collect::<Result<Vec<_>, _>>()?;
    simulate_interleave_ps(&ps, job, policy, job.t_f)
}

/// As [`simulate_interleave`] with arrival times and inference duration in
/// picoseconds.
pub fn simulate_interleave_ps(
    arrivals: &[u128],
    job: &HwParams,
    policy: Policy,
    inference_ps: u128,
) -> Result<Trace, HwError> {
    job.validate()?;
    if let Some(k) = (1..arrivals.len()).find(|&k| arrivals[k] < arrivals[k - 1]) {
        return Err(HwError::Unsorted(k));
    }
    if inference_ps == 0 {
        return Err(HwError::Params("inference duration must be positive".into()));
    }
    let per_iter = job.serialization() * u128::from(job.m) * u128::from(job.n);
    let units_per_iter = per_iter.ceil().to_integer();
    let update = job.serialization() * (job.t_l + job.t_g + job.t_u) * u128::from(job.m) * u128::from(job.n);
    let mut work = Work {
        t_f: job.t_f,
        units_per_iter,
        update_ps: update.ceil().to_integer(),
        iterations: job.k,
        iter: 0,
        units_in_iter: 0,
        done_units: 0,
    };
    let mut events = Vec::new();
    let mut now = 0u128;
    match policy {
        Policy::BlockUntilDone => {
            now = work.run(now, None, &mut events);
            for &a in arrivals {
                let start = now.max(a);
                events.push(Event {
                    kind: EventKind::Inference,
                    start_ps: start,
                    duration_ps: inference_ps,
                    progress: work.done_units,
                });
                now = start + inference_ps;
            }
        }
        Policy::TrainInGaps => {
            for &a in arrivals {
                if now < a && !work.finished() {
                    let resumed = work.done_units > 0;
                    if resumed {
                        events.push(marker(EventKind::Resume, now, work.done_units));
                    }
                    now = work.run(now, Some(a), &mut events);
                    if !work.finished() {
                        events.push(marker(EventKind::Pause, now, work.done_units));
                    }
                }
                let start = now.max(a);
                events.push(Event {
                    kind: EventKind::Inference,
                    start_ps: start,
                    duration_ps: inference_ps,
                    progress: work.done_units,
                });
                now = start + inference_ps;
            }
            if !work.finished() {
                if work.done_units > 0 {
                    events.push(marker(EventKind::Resume, now, work.done_units));
                }
                work.run(now, None, &mut events);
            }
        }
    }
    Ok(Trace {
        events,
        total_units: units_per_iter * u128::from(job.k),
    })
}

fn marker(kind: EventKind, at: u128, progress: u128) -> Event {
    Event {
        kind,
        start_ps: at,
        duration_ps: 0,
        progress,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> HwParams {
        HwParams {
            t_f: 1000,
            t_l: 0,
            t_g: 0,
            t_u: 0,
            w: 4,
            p: 2,
            m: 3,
            n: 2,
            k: 5,
        }
    }

    #[test]
    fn iteration_time_examples() {
        let p = HwParams {
            w: 10,
            p: 10,
            ..small()
        };
        assert_eq!(iteration_time(&p).unwrap().exact_ps, Ratio::from_integer(1000 * 2));
        let p = HwParams {
            p: 1000,
            ..HwParams::reference()
        };
        assert_eq!(iteration_time(&p).unwrap().seconds(), 0.0157);
        let a = iteration_time(&HwParams { p: 500, ..p }).unwrap().exact_ps;
        assert_eq!(iteration_time(&p).unwrap().exact_ps * 2, a);
    }

    #[test]
    fn uneven_blocks_report_both() {
        let p = HwParams {
            w: 10,
            p: 4,
            ..small()
        };
        let t = iteration_time(&p).unwrap();
        assert_eq!(t.exact_ps, Ratio::new(10 * 1000 * 2, 4));
        assert_eq!(t.ceil_ps, 3 * 1000 * 2);
    }

    #[test]
    fn headline_total() {
        assert_eq!(total_training_time(&HwParams::reference()).unwrap().seconds(), 100.0);
        assert!(HwParams { m: 0, ..HwParams::reference() }.validate().is_err());
        assert!(HwParams { p: 0, ..HwParams::reference() }.validate().is_err());
        assert!(HwParams { p: 157_001, ..HwParams::reference() }.validate().is_err());
    }

    #[test]
    fn table_pct_display() {
        let a = area_overhead(1, false).unwrap();
        assert_eq!((a.lut, a.ff), (91, 68));
        assert_eq!(display_pct(a.lut_pct, 2), "0.04");
        assert_eq!(display_pct(a.ff_pct, 3), "0.017");
        assert_eq!(display_pct(pct(9, 203_128), 2), "0.01");
        assert_eq!(display_pct(pct(37, 406_256), 2), "0.01");
        assert_eq!(display_pct(0.0, 2), "0.00");
        let b = area_overhead(1, true).unwrap();
        assert_eq!((b.lut, b.ff), (100, 105));
        assert!(area_overhead(0, false).is_err());
    }

    #[test]
    fn no_arrivals_policies_agree() {
        let job = small();
        let total = total_training_time(&job).unwrap().exact_ps.to_integer();
        for pol in [Policy::BlockUntilDone, Policy::TrainInGaps] {
            let t = simulate_interleave_ps(&[], &job, pol, 1000).unwrap();
            assert_eq!(t.end_ps(), total);
            assert_eq!(t.progress(), t.total_units);
        }
    }

    #[test]
    fn unsorted_rejected() {
        assert_eq!(
            simulate_interleave_ps(&[5, 3], &small(), Policy::TrainInGaps, 1),
            Err(HwError::Unsorted(1))
        );
    }

    #[test]
    fn updates_are_scheduled_per_iteration() {
        let job = HwParams { t_u: 10, ..small() };
        let t = simulate_interleave_ps(&[], &job, Policy::TrainInGaps, 1000).unwrap();
        assert_eq!(t.events.iter().filter(|e| e.kind == EventKind::TrainUpdate).count(), 5);
        assert_eq!(t.duration_of(EventKind::TrainUpdate), 5 * 10 * 2 * 3 * 2);
        assert_eq!(t.duration_of(EventKind::TrainEval), total_training_time(&job).unwrap().ceil_ps);
    }
}
