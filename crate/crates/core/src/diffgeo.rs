//! Differential geometry of the sampled voltage trajectory.
//!
//! The voltage `υ` is the velocity of the flux curve, so everything here is
//! computed from `υ` and its time derivative `υ′`:
//!
//! * geometric frequency `ω_υ = υ × υ′ / |υ|²`
//! * arc length `s(t) = ∫ |υ| dτ`
//! * curvature `κ = |υ × υ′| / |υ|³`, hence `|ω_υ| = κ |υ|`
//!
//! Samples with `|υ|` below [`GeometryConfig::v_floor`], or whose difference
//! stencil straddles a detected discontinuity of `υ`, are flagged invalid
//! rather than clamped.

use crate::frames::AlphaBetaVector;
use crate::series::UniformSeries;
use crate::{Error, Result};

/// Neighbourhood (in intervals, each side) used to judge if a step is a jump.
const JUMP_NEIGHBOURHOOD: usize = 8;
/// Steps no larger than this are never treated as jumps.
const JUMP_ABS_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// Magnitude below which `ω_υ` is undefined, per-unit.
    pub v_floor: f64,
    /// A sample-to-sample step larger than this multiple of the local median
    /// step is a discontinuity. `None` disables detection.
    pub jump_ratio: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { v_floor: 1e-6, jump_ratio: Some(10.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaSample {
    pub t: f64,
    /// `ω_υ`, rad/s, on the αβγ basis.
    pub omega: AlphaBetaVector,
    /// `|υ|` at `t`.
    pub v_mag: f64,
    /// The derivative stencil of this sample straddles a discontinuity.
    pub jump: bool,
    pub valid: bool,
}

/// `ω_υ` for every sample of a series, on the series' time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaTrace {
    t0: f64,
    dt: f64,
    samples: Vec<OmegaSample>,
}

impl OmegaTrace {
    pub fn new(t0: f64, dt: f64, samples: Vec<OmegaSample>) -> Self {
        Self { t0, dt, samples }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[OmegaSample] {
        &self.samples
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    /// Nearest sample index to `t`, erroring outside the trace.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = ((t - self.t0) / self.dt).round();
        if self.samples.is_empty() || k < 0.0 || k as usize >= self.samples.len() {
            return Err(Error::OutsideTrace { t, start: self.t0, end: self.end_time() });
        }
        Ok(k as usize)
    }
}

/// Geometric description of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryTrace {
    pub omega: OmegaTrace,
    /// Cumulative arc length from the first sample, per-unit·s.
    pub arc_length: Vec<f64>,
    /// Curvature, `None` where invalid.
    pub curvature: Vec<Option<f64>>,
}

/// Time derivative of every channel.
///
/// Fourth-order stencils everywhere: the five-point central difference in
/// the interior and five-point one-sided differences at the two samples
/// nearest each boundary. Exact for polynomials up to degree four.
pub fn derivative(series: &UniformSeries) -> Result<UniformSeries> {
    let n = series.len();
    if n < 5 {
        return Err(Error::TooShort { needed: 5, have: n });
    }
    let scale = 1.0 / (12.0 * series.dt());
    let out = series
        .channels()
        .iter()
        .map(|x| {
            let mut d = vec![0.0; n];
            d[0] = (-25.0 * x[0] + 48.0 * x[1] - 36.0 * x[2] + 16.0 * x[3] - 3.0 * x[4]) * scale;
            d[1] = (-3.0 * x[0] - 10.0 * x[1] + 18.0 * x[2] - 6.0 * x[3] + x[4]) * scale;
            for k in 2..n - 2 {
                d[k] = (x[k - 2] - 8.0 * x[k - 1] + 8.0 * x[k + 1] - x[k + 2]) * scale;
            }
            let m = n - 1;
            d[m - 1] = (3.0 * x[m] + 10.0 * x[m - 1] - 18.0 * x[m - 2] + 6.0 * x[m - 3] - x[m - 4]) * scale;
            d[m] = (25.0 * x[m] - 48.0 * x[m - 1] + 36.0 * x[m - 2] - 16.0 * x[m - 3] + 3.0 * x[m - 4]) * scale;
            d
        })
        .collect();
    Ok(series.with_channels(out))
}

/// Sample range `[lo, hi]` read by the derivative stencil of sample `k`.
fn stencil_span(k: usize, n: usize) -> (usize, usize) {
    if k < 2 {
        (0, 4)
    } else if k + 2 >= n {
        (n - 5, n - 1)
    } else {
        (k - 2, k + 2)
    }
}

/// Flags intervals `[k, k+1]` across which the trajectory jumps.
///
/// A step counts as a jump when it exceeds `ratio` times the median step of
/// its neighbourhood.
pub fn detect_jumps(series: &UniformSeries, ratio: f64) -> Vec<bool> {
    let n = series.len();
    if n < 2 {
        return Vec::new();
    }
    let steps: Vec<f64> =
        (0..n - 1).map(|k| series.channels().iter().map(|c| (c[k + 1] - c[k]).powi(2)).sum::<f64>().sqrt()).collect();
    let mut scratch = Vec::with_capacity(2 * JUMP_NEIGHBOURHOOD);
    (0..steps.len())
        .map(|k| {
            if steps[k] <= JUMP_ABS_FLOOR {
                return false;
            }
            let lo = k.saturating_sub(JUMP_NEIGHBOURHOOD);
            let hi = (k + JUMP_NEIGHBOURHOOD).min(steps.len() - 1);
            scratch.clear();
            scratch.extend((lo..=hi).filter(|&j| j != k).map(|j| steps[j]));
            if scratch.is_empty() {
                return false;
            }
            let mid = scratch.len() / 2;
            let (_, median, _) = scratch.select_nth_unstable_by(mid, f64::total_cmp);
            steps[k] > ratio * *median
        })
        .collect()
}

/// Per-sample flag: the sample's derivative stencil covers a jump interval.
pub(crate) fn jump_flags(series: &UniformSeries, cfg: &GeometryConfig) -> Vec<bool> {
    let n = series.len();
    let Some(ratio) = cfg.jump_ratio else {
        return vec![false; n];
    };
    let jumps = detect_jumps(series, ratio);
    if !jumps.iter().any(|&j| j) || n < 5 {
        return vec![false; n];
    }
    // prefix[k] = number of jump intervals among [0, k)
    let mut prefix = vec![0usize; jumps.len() + 1];
    for (k, &j) in jumps.iter().enumerate() {
        prefix[k + 1] = prefix[k] + j as usize;
    }
    (0..n)
        .map(|k| {
            let (lo, hi) = stencil_span(k, n);
            prefix[hi] > prefix[lo]
        })
        .collect()
}

/// Geometric frequency `ω_υ = υ × υ′ / |υ|²` at every sample.
pub fn omega_v(series: &UniformSeries, cfg: &GeometryConfig) -> Result<OmegaTrace> {
    series.three_channels()?;
    let d = derivative(series)?;
    let jumps = jump_flags(series, cfg);
    let samples = (0..series.len())
        .map(|k| {
            let v = series.vector(k);
            let dv = d.vector(k);
            let v_mag = v.norm();
            let jump = jumps[k];
            let valid = v_mag >= cfg.v_floor && !jump;
            let omega =
                if v_mag >= cfg.v_floor { v.cross(dv) * (1.0 / (v_mag * v_mag)) } else { AlphaBetaVector::ZERO };
            OmegaSample { t: series.time(k), omega, v_mag, jump, valid }
        })
        .collect();
    Ok(OmegaTrace::new(series.t0(), series.dt(), samples))
}

/// Cumulative trapezoidal integral of `|υ|`, starting at zero.
pub fn arc_length(series: &UniformSeries) -> Result<Vec<f64>> {
    let pts = series.vectors()?;
    let mut s = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for p in pts {
        let m = p.norm();
        if let Some(q) = prev {
            acc += 0.5 * (q + m) * series.dt();
        }
        s.push(acc);
        prev = Some(m);
    }
    Ok(s)
}

/// Curvature `|υ × υ′| / |υ|³`, `None` below the magnitude floor.
pub fn curvature(series: &UniformSeries, cfg: &GeometryConfig) -> Result<Vec<Option<f64>>> {
    series.three_channels()?;
    let d = derivative(series)?;
    Ok((0..series.len())
        .map(|k| {
            let v = series.vector(k);
            let m = v.norm();
            (m >= cfg.v_floor).then(|| v.cross(d.vector(k)).norm() / (m * m * m))
        })
        .collect())
}

pub fn geometry(series: &UniformSeries, cfg: &GeometryConfig) -> Result<GeometryTrace> {
    Ok(GeometryTrace {
        omega: omega_v(series, cfg)?,
        arc_length: arc_length(series)?,
        curvature: curvature(series, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, Event, SignalSpec, DEFAULT_DT};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const W50: f64 = 2.0 * PI * 50.0;

    fn single(values: Vec<f64>, dt: f64) -> UniformSeries {
        UniformSeries::new(0.0, dt, vec![("x", values)]).unwrap()
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = derivative(&single(vec![3.25; 50], 1e-3)).unwrap();
        assert!(d.channel(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn derivative_exact_on_quartics() {
        let dt = 0.01;
        let t: Vec<f64> = (0..30).map(|k| k as f64 * dt).collect();
        let lin = derivative(&single(t.iter().map(|t| 2.5 * t - 1.0).collect(), dt)).unwrap();
        assert!(lin.channel(0).iter().all(|&x| (x - 2.5).abs() < 1e-10));
        let quartic = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t.powi(3) + 3.0 * t.powi(4);
        let dquartic = |t: f64| 1.0 - 4.0 * t + 1.5 * t * t + 12.0 * t.powi(3);
        let d = derivative(&single(t.iter().map(|&t| quartic(t)).collect(), dt)).unwrap();
        for (k, &tk) in t.iter().enumerate() {
            assert!((d.channel(0)[k] - dquartic(tk)).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn derivative_of_cosine_matches_analytic() {
        let dt = DEFAULT_DT;
        let x: Vec<f64> = (0..2001).map(|k| (W50 * k as f64 * dt).cos()).collect();
        let d = derivative(&single(x, dt)).unwrap();
        assert!(d.channel(0)[0].abs() < 1e-6 * W50);
        for k in (0..2001).step_by(37) {
            let exact = -W50 * (W50 * k as f64 * dt).sin();
            assert!((d.channel(0)[k] - exact).abs() < 1e-6 * W50);
        }
        assert!(matches!(derivative(&single(vec![1.0; 4], dt)), Err(Error::TooShort { .. })));
    }

    #[test]
    fn balanced_omega_is_constant_gamma() {
        let s = synth::synth_balanced(&SignalSpec::balanced(1.0, 50.0), 0.04, DEFAULT_DT).unwrap();
        let tr = omega_v(&s, &GeometryConfig::default()).unwrap();
        for o in tr.samples() {
            assert!(o.valid);
            assert!(o.omega.alpha.abs() < 1e-9 && o.omega.beta.abs() < 1e-9);
            assert_relative_eq!(o.omega.gamma, W50, max_relative = 1e-9);
        }
    }

    #[test]
    fn unbalanced_omega_at_axes() {
        let s =
            synth::synth_unbalanced(&SignalSpec::balanced(1.0, 50.0).with_unbalance(1.5), 0.04, DEFAULT_DT).unwrap();
        let tr = omega_v(&s, &GeometryConfig::default()).unwrap();
        // θ = 0 at k = 0 and 2000, θ = π/2 at k = 500
        assert_relative_eq!(tr.samples()[2000].omega.norm(), W50 / 1.5, max_relative = 1e-9);
        assert_relative_eq!(tr.samples()[500].omega.norm(), 1.5 * W50, max_relative = 1e-9);
    }

    #[test]
    fn arc_length_cases() {
        let s = synth::synth_balanced(&SignalSpec::balanced(1.0, 50.0), 0.02, DEFAULT_DT).unwrap();
        let arc = arc_length(&s).unwrap();
        assert_relative_eq!(*arc.last().unwrap(), 0.02, max_relative = 1e-12);
        assert!(arc.windows(2).all(|w| w[1] >= w[0]));
        let z = synth::synth_dc(AlphaBetaVector::ZERO, 0.01, DEFAULT_DT).unwrap();
        assert!(arc_length(&z).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn curvature_cases() {
        let cfg = GeometryConfig::default();
        let s = synth::synth_balanced(&SignalSpec::balanced(0.8, 50.0), 0.02, DEFAULT_DT).unwrap();
        for k in curvature(&s, &cfg).unwrap() {
            assert_relative_eq!(k.unwrap(), W50 / 0.8, max_relative = 1e-9);
        }
        let dc = synth::synth_dc(AlphaBetaVector::new(1.0, 0.0, 0.0), 0.01, DEFAULT_DT).unwrap();
        assert!(curvature(&dc, &cfg).unwrap().iter().all(|k| *k == Some(0.0)));
        let zero = synth::synth_dc(AlphaBetaVector::ZERO, 0.01, DEFAULT_DT).unwrap();
        assert!(curvature(&zero, &cfg).unwrap().iter().all(Option::is_none));
        assert!(omega_v(&zero, &cfg).unwrap().samples().iter().all(|o| !o.valid));
    }

    #[test]
    fn jumps_flag_only_straddling_stencils() {
        let spec = SignalSpec::balanced(1.0, 50.0);
        let s = synth::synth_balanced(&spec, 0.1, DEFAULT_DT).unwrap();
        assert!(detect_jumps(&s, 10.0).iter().all(|&j| !j));

        let d = synth::apply_events(
            &s,
            &[Event::Dip { start: 0.05 - 0.5 * DEFAULT_DT, end: 0.1 + DEFAULT_DT, depth: 0.8 }],
        )
        .unwrap();
        let tr = omega_v(&d, &GeometryConfig::default()).unwrap();
        let flagged: Vec<usize> = tr.samples().iter().enumerate().filter(|(_, o)| o.jump).map(|(k, _)| k).collect();
        // the step is between samples 4999 and 5000
        assert_eq!(flagged, vec![4998, 4999, 5000, 5001]);

        let off = GeometryConfig { jump_ratio: None, ..Default::default() };
        assert!(omega_v(&d, &off).unwrap().samples().iter().all(|o| o.valid));
    }

    #[test]
    fn geometry_consistency() {
        let spec = SignalSpec::balanced(1.0, 50.0)
            .with_unbalance(1.3)
            .with_harmonic(synth::HarmonicSpec::with_degrees(5.0, 0.08, 40.0));
        let s = synth::synthesize(&spec, 0.03, DEFAULT_DT, 0).unwrap();
        let g = geometry(&s, &GeometryConfig::default()).unwrap();
        for (o, k) in g.omega.samples().iter().zip(&g.curvature) {
            let k = k.unwrap();
            assert_relative_eq!(o.omega.norm(), k * o.v_mag, max_relative = 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scale_invariance_orthogonality_and_reversal(
            c in 0.05f64..20.0,
            r in 0.5f64..2.0,
            phase in 0.0f64..std::f64::consts::TAU,
            vh in 0.0f64..0.12,
        ) {
            let spec = SignalSpec::balanced(1.0, 50.0)
                .with_phase(phase)
                .with_unbalance(r)
                .with_harmonic(synth::HarmonicSpec::new(7.0, vh, 1.0));
            let s = synth::synthesize(&spec, 0.01, DEFAULT_DT, 0).unwrap();
            let cfg = GeometryConfig::default();
            let base = omega_v(&s, &cfg).unwrap();
            let scaled = omega_v(&s.map_samples(|x| c * x), &cfg).unwrap();
            let rev_channels: Vec<Vec<f64>> = s.channels().iter().map(|ch| ch.iter().rev().copied().collect()).collect();
            let reversed = omega_v(&s.with_channels(rev_channels), &cfg).unwrap();
            let n = s.len();
            for k in 0..n {
                let a = base.samples()[k];
                let b = scaled.samples()[k];
                prop_assert!((a.omega - b.omega).norm() <= 1e-9 * a.omega.norm());
                let v = s.vector(k);
                prop_assert!(a.omega.dot(v).abs() <= 1e-9 * a.omega.norm() * v.norm());
                let rv = reversed.samples()[n - 1 - k];
                prop_assert!((a.omega + rv.omega).norm() <= 1e-9 * a.omega.norm());
            }
        }
    }
}
