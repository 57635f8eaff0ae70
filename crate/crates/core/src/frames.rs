//! Phase-domain to stationary-frame conversion.
//!
//! The amplitude-invariant Clarke transform is used throughout, so a balanced
//! set of peak amplitude `V` maps to a circle of radius `V` in the αβ plane.

use std::ops::{Add, Mul, Neg, Sub};

use crate::series::{UniformSeries, ABC_CHANNELS, ALPHA_BETA_CHANNELS};
#[cfg(test)]
use crate::Error;
use crate::Result;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// One instant of phase-domain voltages, per-unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePhaseFrame {
    pub t: f64,
    pub va: f64,
    pub vb: f64,
    pub vc: f64,
}

impl ThreePhaseFrame {
    pub fn new(t: f64, va: f64, vb: f64, vc: f64) -> Self {
        Self { t, va, vb, vc }
    }
}

/// A vector in the stationary αβγ frame.
///
/// Used both for voltages and for the rotation vector `ω_υ`, whose
/// components are expressed on the same basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaBetaVector {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AlphaBetaVector {
    pub const ZERO: Self = Self { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.alpha * o.alpha + self.beta * o.beta + self.gamma * o.gamma
    }

    pub fn cross(self, o: Self) -> Self {
        Self {
            alpha: self.beta * o.gamma - self.gamma * o.beta,
            beta: self.gamma * o.alpha - self.alpha * o.gamma,
            gamma: self.alpha * o.beta - self.beta * o.alpha,
        }
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite()
    }

    /// Rotates the αβ components by `angle` radians about the γ axis.
    pub fn rotate_gamma(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { alpha: c * self.alpha - s * self.beta, beta: s * self.alpha + c * self.beta, gamma: self.gamma }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

impl Add for AlphaBetaVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.alpha + o.alpha, self.beta + o.beta, self.gamma + o.gamma)
    }
}

impl Sub for AlphaBetaVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.alpha - o.alpha, self.beta - o.beta, self.gamma - o.gamma)
    }
}

impl Mul<f64> for AlphaBetaVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.alpha * k, self.beta * k, self.gamma * k)
    }
}

impl Neg for AlphaBetaVector {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// Amplitude-invariant Clarke transform.
pub fn clarke(frame: &ThreePhaseFrame) -> AlphaBetaVector {
    let ThreePhaseFrame { va, vb, vc, .. } = *frame;
    AlphaBetaVector {
        alpha: (2.0 / 3.0) * (va - 0.5 * vb - 0.5 * vc),
        beta: (vb - vc) / SQRT_3,
        gamma: (va + vb + vc) / 3.0,
    }
}

/// Inverse of [`clarke`].
pub fn inverse_clarke(v: AlphaBetaVector) -> (f64, f64, f64) {
    let half_sqrt3 = 0.5 * SQRT_3;
    (v.alpha + v.gamma, -0.5 * v.alpha + half_sqrt3 * v.beta + v.gamma, -0.5 * v.alpha - half_sqrt3 * v.beta + v.gamma)
}

/// Applies [`clarke`] sample by sample to a three-channel abc series.
pub fn clarke_series(series: &UniformSeries) -> Result<UniformSeries> {
    let [a, b, c] = series.three_channels()?;
    let n = series.len();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for k in 0..n {
        let v = clarke(&ThreePhaseFrame::new(series.time(k), a[k], b[k], c[k]));
        out[0].push(v.alpha);
        out[1].push(v.beta);
        out[2].push(v.gamma);
    }
    let [al, be, ga] = out;
    UniformSeries::new(
        series.t0(),
        series.dt(),
        vec![(ALPHA_BETA_CHANNELS[0], al), (ALPHA_BETA_CHANNELS[1], be), (ALPHA_BETA_CHANNELS[2], ga)],
    )
}

/// Converts an αβγ series back to phase quantities.
pub fn inverse_clarke_series(series: &UniformSeries) -> Result<UniformSeries> {
    let pts = series.vectors()?;
    let (mut a, mut b, mut c) = (Vec::with_capacity(pts.len()), Vec::new(), Vec::new());
    for p in pts {
        let (x, y, z) = inverse_clarke(p);
        a.push(x);
        b.push(y);
        c.push(z);
    }
    UniformSeries::new(series.t0(), series.dt(), vec![(ABC_CHANNELS[0], a), (ABC_CHANNELS[1], b), (ABC_CHANNELS[2], c)])
}
