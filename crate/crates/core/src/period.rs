//! Geometric period detection.
//!
//! A closed simple trajectory has total curvature 2π, which in the time
//! domain reads `∫ |ω_υ| dτ = 2π` over one period. The period `T` starting at
//! `t_start` is the first time the running integral of `|ω_υ|` reaches 2π.
//!
//! The integral is accumulated with the trapezoidal rule over intervals whose
//! two end samples are both valid; intervals touching an invalid sample are
//! skipped (principal-value treatment). The crossing is located by linear
//! interpolation of the cumulative integral between the bracketing samples.

use std::f64::consts::TAU;

use crate::diffgeo::OmegaTrace;
use crate::frames::AlphaBetaVector;
use crate::{Error, Result};

/// Windows with more invalid samples than this fraction are rejected.
pub const MAX_INVALID_FRACTION: f64 = 0.1;
/// Default horizon, in multiples of the previous (or nominal) period.
pub const HORIZON_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeriodStatus {
    Found,
    NotFoundWithinHorizon,
    InvalidSamples,
}

impl PeriodStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PeriodStatus::Found => "found",
            PeriodStatus::NotFoundWithinHorizon => "not_found_within_horizon",
            PeriodStatus::InvalidSamples => "invalid_samples",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    /// Window anchor, seconds.
    pub t_start: f64,
    /// Sample index of the anchor in the trace it was computed from.
    pub start_index: usize,
    /// Detected period, present only when `status` is `Found`.
    pub period: Option<f64>,
    /// Integral of `|ω_υ|` at termination, radians.
    pub accumulated: f64,
    pub status: PeriodStatus,
}

impl PeriodEstimate {
    pub fn is_found(&self) -> bool {
        self.status == PeriodStatus::Found
    }

    /// The period, or an error naming why there is none.
    pub fn found_period(&self) -> Result<f64> {
        match (self.status, self.period) {
            (PeriodStatus::Found, Some(t)) => Ok(t),
            (status, _) => Err(Error::PeriodNotFound(status.as_str())),
        }
    }

    /// Index of the last whole sample inside the window and the fractional
    /// position of the window end past it.
    pub(crate) fn end_position(&self, dt: f64) -> Option<(usize, f64)> {
        let t = self.period?;
        let pos = t / dt;
        let whole = pos.floor();
        Some((self.start_index + whole as usize, pos - whole))
    }
}

fn interval_abs(trace: &OmegaTrace, j: usize) -> f64 {
    let s = trace.samples();
    let (a, b) = (&s[j], &s[j + 1]);
    if a.valid && b.valid {
        0.5 * (a.omega.norm() + b.omega.norm()) * trace.dt()
    } else {
        0.0
    }
}

fn finish(
    t_start: f64,
    start_index: usize,
    dt: f64,
    crossing: Option<f64>,
    accumulated: f64,
    invalid: usize,
    samples: usize,
) -> PeriodEstimate {
    let too_many_invalid = invalid as f64 > MAX_INVALID_FRACTION * samples as f64;
    let (status, period) = match crossing {
        _ if too_many_invalid => (PeriodStatus::InvalidSamples, None),
        // a closure inside fewer than three samples is aliasing, not a period
        Some(t) if t < 2.0 * dt => (PeriodStatus::InvalidSamples, None),
        Some(t) => (PeriodStatus::Found, Some(t)),
        None => (PeriodStatus::NotFoundWithinHorizon, None),
    };
    PeriodEstimate { t_start, start_index, period, accumulated, status }
}

fn horizon_intervals(horizon: f64, dt: f64) -> usize {
    (horizon / dt + 1e-9).floor() as usize
}

/// Detects the period of the window starting at the sample nearest `t_start`.
///
/// The search stops after `horizon` seconds or at the end of the trace.
pub fn detect_period(trace: &OmegaTrace, t_start: f64, horizon: f64) -> Result<PeriodEstimate> {
    if !(horizon > 0.0) {
        return Err(Error::param("horizon must be positive"));
    }
    let i = trace.index_of(t_start)?;
    let s = trace.samples();
    let dt = trace.dt();
    let last = (i + horizon_intervals(horizon, dt)).min(s.len() - 1);

    let mut acc = 0.0;
    let mut invalid = usize::from(!s[i].valid);
    let mut samples = 1;
    let mut crossing = None;
    for j in i..last {
        samples += 1;
        invalid += usize::from(!s[j + 1].valid);
        let c = interval_abs(trace, j);
        if c > 0.0 && acc + c >= TAU {
            let frac = (TAU - acc) / c;
            crossing = Some(((j - i) as f64 + frac) * dt);
            acc = TAU;
            break;
        }
        acc += c;
    }
    Ok(finish(s[i].t, i, dt, crossing, acc, invalid, samples))
}

/// Prefix integrals of a trace, for O(log n) period queries at every anchor.
#[derive(Debug, Clone)]
pub struct CumulativeTrace {
    t0: f64,
    dt: f64,
    /// `abs[k]` = trapezoidal integral of `|ω_υ|` from sample 0 to sample k.
    abs: Vec<f64>,
    /// Same for each component of `ω_υ`.
    vector: Vec<AlphaBetaVector>,
    /// Number of invalid samples among `[0, k)`.
    invalid: Vec<usize>,
    /// Number of jump-flagged samples among `[0, k)`.
    jumps: Vec<usize>,
    /// Sum of unit directions of `ω_υ` over valid samples among `[0, k)`.
    direction: Vec<AlphaBetaVector>,
}

impl CumulativeTrace {
    pub fn new(trace: &OmegaTrace) -> Self {
        let s = trace.samples();
        let n = s.len();
        let dt = trace.dt();
        let mut abs = Vec::with_capacity(n);
        let mut vector = Vec::with_capacity(n);
        let mut invalid = Vec::with_capacity(n + 1);
        let mut jumps = Vec::with_capacity(n + 1);
        let mut direction = Vec::with_capacity(n + 1);
        invalid.push(0);
        jumps.push(0);
        direction.push(AlphaBetaVector::ZERO);
        if n > 0 {
            abs.push(0.0);
            vector.push(AlphaBetaVector::ZERO);
        }
        for (k, o) in s.iter().enumerate() {
            if k + 1 < n {
                let b = &s[k + 1];
                let (da, dv) = if o.valid && b.valid {
                    (0.5 * (o.omega.norm() + b.omega.norm()) * dt, (o.omega + b.omega) * (0.5 * dt))
                } else {
                    (0.0, AlphaBetaVector::ZERO)
                };
                abs.push(abs[k] + da);
                vector.push(vector[k] + dv);
            }
            invalid.push(invalid[k] + usize::from(!o.valid));
            jumps.push(jumps[k] + usize::from(o.jump));
            let m = o.omega.norm();
            let unit = if o.valid && m > 0.0 { o.omega * (1.0 / m) } else { AlphaBetaVector::ZERO };
            direction.push(direction[k] + unit);
        }
        Self { t0: trace.t0(), dt, abs, vector, invalid, jumps, direction }
    }

    pub fn len(&self) -> usize {
        self.abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abs.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Same result as [`detect_period`] for the window anchored at sample `i`.
    pub fn detect(&self, i: usize, horizon: f64) -> Result<PeriodEstimate> {
        let n = self.abs.len();
        if i >= n {
            return Err(Error::OutsideTrace { t: self.time(i), start: self.t0, end: self.time(n.saturating_sub(1)) });
        }
        let last = (i + horizon_intervals(horizon, self.dt)).min(n - 1);
        let target = self.abs[i] + TAU;
        // first j in (i, last] with abs[j] >= target
        let offset = self.abs[i + 1..=last].partition_point(|&a| a < target);
        let (crossing, accumulated, end) = if offset < last - i {
            let j = i + offset; // crossing inside interval [j, j+1]
            let c = self.abs[j + 1] - self.abs[j];
            let frac = (target - self.abs[j]) / c;
            (Some(((j - i) as f64 + frac) * self.dt), TAU, j + 1)
        } else {
            (None, self.abs[last] - self.abs[i], last)
        };
        let invalid = self.invalid[end + 1] - self.invalid[i];
        Ok(finish(self.time(i), i, self.dt, crossing, accumulated, invalid, end - i + 1))
    }

    fn interpolate<T>(&self, values: &[T], est: &PeriodEstimate, f: impl Fn(&T, &T, f64) -> T) -> Option<T>
    where
        T: Copy,
    {
        let (j, frac) = est.end_position(self.dt)?;
        if j >= values.len() {
            return None;
        }
        let hi = values.get(j + 1).copied().unwrap_or(values[j]);
        Some(f(&values[j], &hi, frac))
    }

    /// `∫ |ω_υ| dτ` over the estimate's window.
    pub fn abs_integral(&self, est: &PeriodEstimate) -> Option<f64> {
        let end = self.interpolate(&self.abs, est, |a, b, f| a + f * (b - a))?;
        Some(end - self.abs[est.start_index])
    }

    /// `∫ ω_υ dτ` over the estimate's window.
    pub fn vector_integral(&self, est: &PeriodEstimate) -> Option<AlphaBetaVector> {
        let end = self.interpolate(&self.vector, est, |&a, &b, f| a + (b - a) * f)?;
        Some(end - self.vector[est.start_index])
    }

    /// Normalised mean unit direction of `ω_υ` over the window's valid samples.
    pub fn mean_direction(&self, est: &PeriodEstimate) -> Option<AlphaBetaVector> {
        let (j, _) = est.end_position(self.dt)?;
        let end = (j + 2).min(self.direction.len() - 1);
        let sum = self.direction[end] - self.direction[est.start_index];
        let m = sum.norm();
        (m > 0.0).then(|| sum * (1.0 / m))
    }

    /// Whether any sample of the window `[t_start, t_start + T]` is jump-flagged.
    pub fn window_has_jump(&self, est: &PeriodEstimate) -> bool {
        let end = match est.end_position(self.dt) {
            Some((j, frac)) if frac > 0.0 => j + 1,
            Some((j, _)) => j,
            None => return false,
        };
        let end = end.min(self.jumps.len() - 2);
        self.jumps[end + 1] > self.jumps[est.start_index]
    }
}

/// Runs period detection at every `stride`-th sample.
///
/// The horizon is [`HORIZON_FACTOR`] times the last period found, starting
/// from the nominal period.
pub fn period_track(trace: &OmegaTrace, stride: usize, nominal_hz: f64) -> Result<Vec<PeriodEstimate>> {
    if stride == 0 {
        return Err(Error::param("stride must be at least one sample"));
    }
    if !(nominal_hz > 0.0) {
        return Err(Error::param("nominal frequency must be positive"));
    }
    let cum = CumulativeTrace::new(trace);
    let mut last_period = 1.0 / nominal_hz;
    let mut out = Vec::with_capacity(trace.len() / stride + 1);
    for i in (0..trace.len()).step_by(stride) {
        let est = cum.detect(i, HORIZON_FACTOR * last_period)?;
        if let Some(t) = est.period {
            last_period = t;
        }
        out.push(est);
    }
    Ok(out)
}
