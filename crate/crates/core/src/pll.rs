//! Synchronous-reference-frame PLL and a first-order low-pass, used as the
//! conventional baseline next to the QSS estimate.

use std::f64::consts::{PI, TAU};

use crate::series::UniformSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllConfig {
    /// Proportional gain, rad/s per rad.
    pub kp: f64,
    /// Integral gain, rad/s² per rad.
    pub ki: f64,
    /// Free-running frequency, rad/s.
    pub omega_nominal: f64,
    /// Cutoff of the low-pass applied to the frequency output, Hz.
    pub lp_cutoff: f64,
}

impl Default for PllConfig {
    fn default() -> Self {
        Self { kp: 92.0, ki: 4240.0, omega_nominal: TAU * 50.0, lp_cutoff: 20.0 }
    }
}

impl PllConfig {
    pub fn with_nominal_hz(mut self, hz: f64) -> Self {
        self.omega_nominal = TAU * hz;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.kp > 0.0 && self.ki > 0.0) {
            return Err(Error::param("PLL gains must be positive"));
        }
        if !(self.lp_cutoff > 0.0) {
            return Err(Error::param("low-pass cutoff must be positive"));
        }
        if !self.omega_nominal.is_finite() {
            return Err(Error::param("nominal frequency must be finite"));
        }
        Ok(())
    }
}

/// Causal first-order low-pass from the bilinear transform with the cutoff
/// prewarped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderLowPass {
    b: f64,
    a1: f64,
    prev_in: f64,
    prev_out: f64,
    primed: bool,
}

impl FirstOrderLowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Result<Self> {
        let nyquist = 0.5 / dt;
        if !(cutoff_hz > 0.0) || cutoff_hz >= nyquist {
            return Err(Error::param(format!("cutoff must lie in (0, {nyquist}) Hz for dt = {dt}, got {cutoff_hz}")));
        }
        let k = (PI * cutoff_hz * dt).tan();
        Ok(Self { b: k / (1.0 + k), a1: (k - 1.0) / (k + 1.0), prev_in: 0.0, prev_out: 0.0, primed: false })
    }

    /// Filters one sample. The state starts at rest on the first input.
    pub fn step(&mut self, x: f64) -> f64 {
        if !self.primed {
            self.primed = true;
            self.prev_in = x;
            self.prev_out = x;
            return x;
        }
        let y = self.b * (x + self.prev_in) - self.a1 * self.prev_out;
        self.prev_in = x;
        self.prev_out = y;
        y
    }
}

/// SRF-PLL loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrfPll {
    cfg: PllConfig,
    dt: f64,
    theta: f64,
    integrator: f64,
    omega: f64,
}

impl SrfPll {
    pub fn new(cfg: PllConfig, dt: f64) -> Result<Self> {
        cfg.check()?;
        if !(dt > 0.0) {
            return Err(Error::param("dt must be positive"));
        }
        Ok(Self { cfg, dt, theta: 0.0, integrator: 0.0, omega: cfg.omega_nominal })
    }

    /// Advances one sample; returns the unfiltered frequency estimate, rad/s.
    pub fn step(&mut self, alpha: f64, beta: f64) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let vq = -alpha * s + beta * c;
        self.integrator += self.cfg.ki * vq * self.dt;
        self.omega = self.cfg.omega_nominal + self.cfg.kp * vq + self.integrator;
        self.theta = (self.theta + self.omega * self.dt).rem_euclid(TAU);
        self.omega
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Low-passed PLL frequency in Hz, as a single `f_pll` channel.
pub fn pll_track(series: &UniformSeries, cfg: &PllConfig) -> Result<UniformSeries> {
    let [a, b, _] = series.three_channels()?;
    let mut pll = SrfPll::new(*cfg, series.dt())?;
    let mut lp = FirstOrderLowPass::new(cfg.lp_cutoff, series.dt())?;
    let f = a.iter().zip(b).map(|(&x, &y)| lp.step(pll.step(x, y) / TAU)).collect();
    UniformSeries::new(series.t0(), series.dt(), vec![("f_pll", f)])
}

/// Applies [`FirstOrderLowPass`] to every channel.
pub fn lowpass(series: &UniformSeries, cutoff: f64) -> Result<UniformSeries> {
    let proto = FirstOrderLowPass::new(cutoff, series.dt())?;
    let channels = series
        .channels()
        .iter()
        .map(|c| {
            let mut lp = proto;
            c.iter().map(|&x| lp.step(x)).collect()
        })
        .collect();
    Ok(series.with_channels(channels))
}
