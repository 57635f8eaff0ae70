//! Analytic and disturbed test waveforms in the αβγ frame.
//!
//! Phase convention: `θ = ω_o t + φ`, harmonics `θ_h = h ω_o t + φ_h`, all
//! positive sequence. With an unbalance ratio `r`, the α amplitude is `r·V`
//! and the β amplitude is `V`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::frames::AlphaBetaVector;
use crate::series::UniformSeries;
use crate::{Error, Result};

/// Default sample time, matching EMT simulation output.
pub const DEFAULT_DT: f64 = 1e-5;
/// Coarse sample time used for sampling-robustness runs.
pub const COARSE_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSpec {
    /// Harmonic order, a positive real.
    pub order: f64,
    /// Peak amplitude, per-unit.
    pub amplitude: f64,
    /// Initial phase, radians.
    pub phase: f64,
}

impl HarmonicSpec {
    pub fn new(order: f64, amplitude: f64, phase: f64) -> Self {
        Self { order, amplitude, phase }
    }

    pub fn with_degrees(order: f64, amplitude: f64, phase_deg: f64) -> Self {
        Self::new(order, amplitude, phase_deg.to_radians())
    }
}

/// A timed disturbance applied on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// Amplitude scaled by `1 − depth` inside the window.
    Dip { start: f64, end: f64, depth: f64 },
    /// αβ plane rotated by `angle` radians inside the window.
    PhaseJump { start: f64, end: f64, angle: f64 },
    /// Frequency increased linearly at `rate` Hz/s from `start`; the phase
    /// offset is the exact integral `π·rate·(t − start)²`.
    FrequencyRamp { start: f64, end: f64, rate: f64 },
}

impl Event {
    fn window(&self) -> (f64, f64) {
        match *self {
            Event::Dip { start, end, .. }
            | Event::PhaseJump { start, end, .. }
            | Event::FrequencyRamp { start, end, .. } => (start, end),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Event::Dip { .. } => "dip",
            Event::PhaseJump { .. } => "phase-jump",
            Event::FrequencyRamp { .. } => "frequency-ramp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    /// Fundamental amplitude (β-axis amplitude when unbalanced), per-unit.
    pub amplitude: f64,
    /// Fundamental angular frequency, rad/s.
    pub omega: f64,
    /// Fundamental initial phase, radians.
    pub phase: f64,
    /// `V_α / V_β`.
    pub unbalance_ratio: f64,
    pub harmonics: Vec<HarmonicSpec>,
    pub noise_std: f64,
    pub events: Vec<Event>,
}

impl SignalSpec {
    pub fn balanced(amplitude: f64, freq_hz: f64) -> Self {
        Self {
            amplitude,
            omega: 2.0 * PI * freq_hz,
            phase: 0.0,
            unbalance_ratio: 1.0,
            harmonics: Vec::new(),
            noise_std: 0.0,
            events: Vec::new(),
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_unbalance(mut self, ratio: f64) -> Self {
        self.unbalance_ratio = ratio;
        self
    }

    pub fn with_harmonic(mut self, h: HarmonicSpec) -> Self {
        self.harmonics.push(h);
        self
    }

    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_std = std;
        self
    }

    pub fn with_event(mut self, e: Event) -> Self {
        self.events.push(e);
        self
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(Error::param("fundamental amplitude must be positive"));
        }
        if !(self.omega > 0.0) {
            return Err(Error::param("fundamental frequency must be positive"));
        }
        if !(self.unbalance_ratio > 0.0) {
            return Err(Error::param("unbalance ratio must be positive"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::param("noise std must be non-negative"));
        }
        for h in &self.harmonics {
            if !(h.order > 0.0) || !(h.amplitude >= 0.0) {
                return Err(Error::param(format!("invalid harmonic {h:?}")));
            }
        }
        Ok(())
    }

    /// Peak-magnitude bound `max(r, 1)·V + Σ V_h` of the undisturbed signal.
    pub fn magnitude_bound(&self) -> f64 {
        self.amplitude * self.unbalance_ratio.max(1.0) + self.harmonics.iter().map(|h| h.amplitude).sum::<f64>()
    }

    fn sample(&self, t: f64) -> AlphaBetaVector {
        let theta = self.omega * t + self.phase;
        let (s, c) = theta.sin_cos();
        let mut v = AlphaBetaVector::new(self.unbalance_ratio * self.amplitude * c, self.amplitude * s, 0.0);
        for h in &self.harmonics {
            let (sh, ch) = (h.order * self.omega * t + h.phase).sin_cos();
            v.alpha += h.amplitude * ch;
            v.beta += h.amplitude * sh;
        }
        v
    }
}

fn sample_count(span: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::param(format!("span must be positive, got {span}")));
    }
    Ok((span / dt + 1e-9).floor() as usize + 1)
}

fn generate(spec: &SignalSpec, span: f64, dt: f64) -> Result<UniformSeries> {
    spec.validate()?;
    let n = sample_count(span, dt)?;
    let pts: Vec<_> = (0..n).map(|k| spec.sample(k as f64 * dt)).collect();
    UniformSeries::from_vectors(0.0, dt, &pts)
}

fn require_clean(spec: &SignalSpec) -> Result<()> {
    if !spec.events.is_empty() || spec.noise_std != 0.0 {
        return Err(Error::param("use synthesize() for specs with events or noise"));
    }
    Ok(())
}

/// `V cos θ, V sin θ, 0` on `[0, span]`.
pub fn synth_balanced(spec: &SignalSpec, span: f64, dt: f64) -> Result<UniformSeries> {
    if spec.unbalance_ratio != 1.0 || !spec.harmonics.is_empty() {
        return Err(Error::param("balanced signal needs unit ratio and no harmonics"));
    }
    require_clean(spec)?;
    generate(spec, span, dt)
}

/// `r·V cos θ, V sin θ, 0`.
pub fn synth_unbalanced(spec: &SignalSpec, span: f64, dt: f64) -> Result<UniformSeries> {
    if !spec.harmonics.is_empty() {
        return Err(Error::param("unbalanced signal takes no harmonics"));
    }
    require_clean(spec)?;
    generate(spec, span, dt)
}

/// Fundamental plus positive-sequence harmonics, superposed on α and β.
pub fn synth_harmonic(spec: &SignalSpec, span: f64, dt: f64) -> Result<UniformSeries> {
    if spec.harmonics.is_empty() {
        return Err(Error::param("harmonic signal needs at least one harmonic"));
    }
    require_clean(spec)?;
    generate(spec, span, dt)
}

pub fn synth_dc(level: AlphaBetaVector, span: f64, dt: f64) -> Result<UniformSeries> {
    if !level.is_finite() {
        return Err(Error::param("DC level must be finite"));
    }
    let n = sample_count(span, dt)?;
    UniformSeries::from_vectors(0.0, dt, &vec![level; n])
}

/// Generates the clean waveform, applies the spec's events, then noise.
pub fn synthesize(spec: &SignalSpec, span: f64, dt: f64, seed: u64) -> Result<UniformSeries> {
    let clean = generate(spec, span, dt)?;
    let disturbed = apply_events(&clean, &spec.events)?;
    add_noise(&disturbed, spec.noise_std, seed)
}

/// Applies dips, phase jumps and frequency ramps inside their windows.
///
/// Samples outside every window are returned unchanged.
pub fn apply_events(series: &UniformSeries, events: &[Event]) -> Result<UniformSeries> {
    let tol = 0.5 * series.dt();
    for (i, e) in events.iter().enumerate() {
        let (start, end) = e.window();
        if !(start < end) {
            return Err(Error::param(format!("event window [{start}, {end}] is empty")));
        }
        if start < series.t0() - tol || end > series.end_time() + tol + series.dt() {
            return Err(Error::param(format!("event window [{start}, {end}] outside series span")));
        }
        if let Event::Dip { depth, .. } = e {
            if !(0.0..=1.0).contains(depth) {
                return Err(Error::param(format!("dip depth {depth} outside [0, 1]")));
            }
        }
        for other in &events[..i] {
            let (s2, e2) = other.window();
            if other.kind() == e.kind() && start < e2 && s2 < end {
                return Err(Error::OverlappingEvents(e.kind()));
            }
        }
    }

    let mut pts = series.vectors()?;
    for (k, p) in pts.iter_mut().enumerate() {
        let t = series.time(k);
        for e in events {
            let (start, end) = e.window();
            if t < start || t >= end {
                continue;
            }
            *p = match *e {
                Event::Dip { depth, .. } => *p * (1.0 - depth),
                Event::PhaseJump { angle, .. } => p.rotate_gamma(angle),
                Event::FrequencyRamp { rate, .. } => {
                    let dt = t - start;
                    p.rotate_gamma(PI * rate * dt * dt)
                }
            };
        }
    }
    let mut out = UniformSeries::from_vectors(series.t0(), series.dt(), &pts)?;
    // keep caller's channel names
    if out.names() != series.names() {
        out = series.with_channels(out.channels().to_vec());
    }
    Ok(out)
}

/// Adds independent zero-mean Gaussian noise to every sample of every channel.
pub fn add_noise(series: &UniformSeries, noise_std: f64, seed: u64) -> Result<UniformSeries> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::param("noise std must be finite and non-negative"));
    }
    if noise_std == 0.0 {
        return Ok(series.clone());
    }
    let normal = Normal::new(0.0, noise_std).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = series.clone();
    for ch in out.channels_mut() {
        for x in ch.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    Ok(out)
}
