//! Time derivative of circulation as a periodicity gate.
//!
//! Over a candidate period the circulation is `Γ = ∮ |υ|² dτ`, and its time
//! derivative telescopes to the endpoint difference
//! `Γ′ = |υ(t_start + T)|² − |υ(t_start)|²`. A closed trajectory has `Γ′ = 0`;
//! the QSS estimate of a window is accepted when `|Γ′| ≤ ε`.
//!
//! `Γ′` is quadratic in the voltage, so `ε` only means something on per-unit
//! signals.
//!
//! Kelvin's theorem applies to smooth closed contours. A window whose samples
//! include a detected discontinuity of `υ` is therefore never accepted, even
//! when its endpoint magnitudes happen to agree (a pure phase jump leaves
//! `|υ|` untouched).

use crate::diffgeo::{self, GeometryConfig};
use crate::period::{PeriodEstimate, PeriodStatus};
use crate::qss::QssEstimate;
use crate::series::UniformSeries;
use crate::{Error, Result};

/// Threshold for clean or simulated data, pu².
pub const EPSILON_SIMULATED: f64 = 1e-2;
/// Threshold for noisy measured data, pu².
pub const EPSILON_MEASURED: f64 = 0.3;

/// Extra samples read around a window when looking for discontinuities.
const JUMP_MARGIN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculationVerdict {
    pub t: f64,
    /// `Γ′`, pu²; `None` when there is no period to evaluate it over.
    pub gamma_prime: Option<f64>,
    pub epsilon: f64,
    /// The window contains a discontinuity of `υ`.
    pub discontinuous: bool,
    pub valid: bool,
    pub period_status: PeriodStatus,
}

impl CirculationVerdict {
    pub(crate) fn new(est: &PeriodEstimate, gamma_prime: Option<f64>, epsilon: f64, discontinuous: bool) -> Self {
        let valid = est.is_found() && !discontinuous && gamma_prime.is_some_and(|g| g.abs() <= epsilon);
        Self { t: est.t_start, gamma_prime, epsilon, discontinuous, valid, period_status: est.status }
    }

    /// `|Γ′| > ε` or no period: the QSS value has no physical meaning here.
    pub fn exceeded(&self) -> bool {
        !self.valid
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Squared magnitude of every sample.
pub(crate) fn squared_magnitudes(series: &UniformSeries) -> Result<Vec<f64>> {
    let [a, b, c] = series.three_channels()?;
    Ok(a.iter().zip(b).zip(c).map(|((a, b), c)| a * a + b * b + c * c).collect())
}

/// Cubic Lagrange weights on samples `j−1..=j+2` for the point `j + x`.
fn cubic_weights(x: f64) -> [f64; 4] {
    [
        -x * (x - 1.0) * (x - 2.0) / 6.0,
        (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
        -(x + 1.0) * x * (x - 2.0) / 2.0,
        (x + 1.0) * x * (x - 1.0) / 6.0,
    ]
}

/// Same cubic, integrated over `[j, j + s]` in units of the step.
fn cubic_integral_weights(s: f64) -> [f64; 4] {
    let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
    [
        -(s4 / 4.0 - s3 + s2) / 6.0,
        (s4 / 4.0 - 2.0 * s3 / 3.0 - s2 / 2.0 + 2.0 * s) / 2.0,
        -(s4 / 4.0 - s3 / 3.0 - s2) / 2.0,
        (s4 / 4.0 - s2 / 2.0) / 6.0,
    ]
}

/// `f` at fractional position `j + frac`: cubic where four neighbours exist,
/// linear otherwise.
fn interpolate(f: &[f64], j: usize, frac: f64) -> Option<f64> {
    if frac == 0.0 {
        return f.get(j).copied();
    }
    let hi = *f.get(j + 1)?;
    if j >= 1 && j + 2 < f.len() {
        let w = cubic_weights(frac);
        return Some(w[0] * f[j - 1] + w[1] * f[j] + w[2] * f[j + 1] + w[3] * f[j + 2]);
    }
    Some(f[j] + frac * (hi - f[j]))
}

/// `∫ f` over `[j, j + s]` (step units times `dt`).
fn integrate_piece(f: &[f64], j: usize, s: f64, dt: f64) -> f64 {
    if j >= 1 && j + 2 < f.len() {
        let w = cubic_integral_weights(s);
        return dt * (w[0] * f[j - 1] + w[1] * f[j] + w[2] * f[j + 1] + w[3] * f[j + 2]);
    }
    let end = f[j] + s * (f[j + 1] - f[j]);
    0.5 * dt * s * (f[j] + end)
}

/// Endpoint-difference `Γ′` from precomputed squared magnitudes.
pub(crate) fn endpoint_difference(sq: &[f64], est: &PeriodEstimate, dt: f64) -> Option<f64> {
    let (j, frac) = est.end_position(dt)?;
    Some(interpolate(sq, j, frac)? - sq[est.start_index])
}

/// Sample range `[lo, hi]` covering the window of a found estimate.
fn window_range(est: &PeriodEstimate, dt: f64, n: usize) -> Option<(usize, usize)> {
    let (j, frac) = est.end_position(dt)?;
    let hi = if frac > 0.0 { j + 1 } else { j };
    (hi < n).then_some((est.start_index, hi))
}

fn window_discontinuous(series: &UniformSeries, est: &PeriodEstimate, cfg: &GeometryConfig) -> Result<bool> {
    let n = series.len();
    let Some((lo, hi)) = window_range(est, series.dt(), n) else {
        return Ok(false);
    };
    let a = lo.saturating_sub(JUMP_MARGIN);
    let b = (hi + JUMP_MARGIN).min(n - 1);
    let part = UniformSeries::new(
        series.time(a),
        series.dt(),
        series.names().iter().zip(series.channels()).map(|(nm, c)| (nm.clone(), c[a..=b].to_vec())).collect(),
    )?;
    let flags = diffgeo::jump_flags(&part, cfg);
    Ok(flags[lo - a..=hi - a].iter().any(|&f| f))
}

/// Validity gate with a configured threshold and discontinuity detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculationGate {
    pub epsilon: f64,
    pub geometry: GeometryConfig,
}

impl CirculationGate {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, geometry: GeometryConfig::default() })
    }

    pub fn verdict(&self, series: &UniformSeries, est: &PeriodEstimate) -> Result<CirculationVerdict> {
        check_epsilon(self.epsilon)?;
        if !est.is_found() {
            return Ok(CirculationVerdict::new(est, None, self.epsilon, false));
        }
        let sq = squared_magnitudes(series)?;
        let gp = endpoint_difference(&sq, est, series.dt()).ok_or(Error::OutsideTrace {
            t: est.t_start + est.period.unwrap_or(0.0),
            start: series.t0(),
            end: series.end_time(),
        })?;
        let disc = window_discontinuous(series, est, &self.geometry)?;
        Ok(CirculationVerdict::new(est, Some(gp), self.epsilon, disc))
    }
}

/// `Γ′ = |υ(t_start + T)|² − |υ(t_start)|²` for one window, with the default
/// discontinuity detector.
pub fn gamma_prime(series: &UniformSeries, est: &PeriodEstimate, epsilon: f64) -> Result<CirculationVerdict> {
    CirculationGate::new(epsilon)?.verdict(series, est)
}

/// `Γ′` as the integral of `d|υ|²/dt = 2 υ·υ′` over the window (piecewise cubic quadrature).
///
/// Kept as a cross-check of the endpoint form.
pub fn gamma_prime_integral(series: &UniformSeries, est: &PeriodEstimate) -> Result<f64> {
    let t = est.found_period()?;
    let d = diffgeo::derivative(series)?;
    let rate: Vec<f64> = (0..series.len()).map(|k| 2.0 * series.vector(k).dot(d.vector(k))).collect();
    let dt = series.dt();
    let (j, frac) = est.end_position(dt).expect("found estimate");
    if j >= rate.len() || (frac > 0.0 && j + 1 >= rate.len()) {
        return Err(Error::OutsideTrace { t: est.t_start + t, start: series.t0(), end: series.end_time() });
    }
    let mut acc = 0.0;
    for k in est.start_index..j {
        acc += integrate_piece(&rate, k, 1.0, dt);
    }
    if frac > 0.0 {
        acc += integrate_piece(&rate, j, frac, dt);
    }
    Ok(acc)
}

/// Re-gates a QSS stream at threshold `epsilon`, one verdict per estimate.
pub fn validity_trace(
    series: &UniformSeries,
    stream: &[(QssEstimate, CirculationVerdict)],
    epsilon: f64,
) -> Result<Vec<CirculationVerdict>> {
    let gate = CirculationGate::new(epsilon)?;
    stream
        .iter()
        .map(|(q, _)| {
            let start_index = series.index_of(q.t).ok_or(Error::OutsideTrace {
                t: q.t,
                start: series.t0(),
                end: series.end_time(),
            })?;
            let est = PeriodEstimate {
                t_start: q.t,
                start_index,
                period: Some(q.period),
                accumulated: std::f64::consts::TAU,
                status: PeriodStatus::Found,
            };
            gate.verdict(series, &est)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgeo::omega_v;
    use crate::period::detect_period;
    use crate::synth::{self, Event, HarmonicSpec, SignalSpec, DEFAULT_DT};
    use proptest::prelude::*;

    fn verdict_at(series: &UniformSeries, t0: f64) -> (PeriodEstimate, CirculationVerdict) {
        let tr = omega_v(series, &GeometryConfig::default()).unwrap();
        let est = detect_period(&tr, t0, 0.08).unwrap();
        let v = gamma_prime(series, &est, EPSILON_SIMULATED).unwrap();
        (est, v)
    }

    #[test]
    fn stationary_signals_close() {
        let specs = [
            SignalSpec::balanced(1.0, 50.0),
            SignalSpec::balanced(1.0, 50.0).with_unbalance(1.5).with_phase(0.4),
            SignalSpec::balanced(1.0, 50.0)
                .with_harmonic(HarmonicSpec::with_degrees(7.0, 0.0583, 210.0))
                .with_harmonic(HarmonicSpec::with_degrees(11.0, 0.0371, 330.0)),
        ];
        for spec in &specs {
            let s = synth::synthesize(spec, 0.08, DEFAULT_DT, 0).unwrap();
            for t0 in [0.003, 0.021, 0.04] {
                let (_, v) = verdict_at(&s, t0);
                assert!(v.valid, "{spec:?} {v:?}");
                assert!(v.gamma_prime.unwrap().abs() < 1e-4);
            }
        }
    }

    #[test]
    fn non_integer_harmonic_does_not_close() {
        let (v, vh, dphi) = (1.0, 0.2, 0.3_f64);
        let spec = SignalSpec::balanced(v, 50.0).with_harmonic(HarmonicSpec::new(7.5, vh, -dphi));
        let s = synth::synthesize(&spec, 0.1, DEFAULT_DT, 0).unwrap();
        let (est, verdict) = verdict_at(&s, 0.0);
        let t = est.period.unwrap();
        // oracle: |υ|² = V² + V_h² + 2 V V_h cos(θ − θ_h), evaluated at the detected window ends
        let w = 2.0 * std::f64::consts::PI * 50.0;
        let rel = |tt: f64| (1.0 - 7.5) * w * tt + dphi;
        let expected = 2.0 * v * vh * (rel(t).cos() - rel(0.0).cos());
        let gp = verdict.gamma_prime.unwrap();
        assert!(gp.abs() > 0.05, "Γ′ = {gp}");
        assert!((gp - expected).abs() < 1e-6, "{gp} vs {expected}");
        assert!(!verdict.valid);
    }

    #[test]
    fn not_found_is_invalid() {
        let dc = synth::synth_dc(crate::AlphaBetaVector::new(1.0, 0.0, 0.0), 0.2, DEFAULT_DT).unwrap();
        let (est, v) = verdict_at(&dc, 0.0);
        assert!(!est.is_found());
        assert!(!v.valid && v.exceeded());
        assert_eq!(v.gamma_prime, None);
        assert_eq!(v.period_status, PeriodStatus::NotFoundWithinHorizon);
        assert!(gamma_prime(&dc, &est, 0.0).is_err());
    }

    #[test]
    fn dip_edges_are_flagged() {
        let spec = SignalSpec::balanced(1.0, 50.0).with_event(Event::Dip { start: 0.05, end: 0.09, depth: 0.8 });
        let s = synth::synthesize(&spec, 0.15, DEFAULT_DT, 0).unwrap();
        let (_, before) = verdict_at(&s, 0.01);
        let (_, edge) = verdict_at(&s, 0.04);
        let (_, inside) = verdict_at(&s, 0.06);
        assert!(before.valid && inside.valid);
        assert!(!edge.valid && edge.discontinuous);
        assert!((edge.gamma_prime.unwrap() - (0.04 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn phase_jump_is_discontinuous() {
        let spec = SignalSpec::balanced(1.0, 50.0).with_event(Event::PhaseJump {
            start: 0.05,
            end: 0.15,
            angle: 30f64.to_radians(),
        });
        let s = synth::synthesize(&spec, 0.15, DEFAULT_DT, 0).unwrap();
        let (_, edge) = verdict_at(&s, 0.04);
        assert!(edge.gamma_prime.unwrap().abs() < 1e-9);
        assert!(edge.discontinuous && !edge.valid);
    }

    #[test]
    fn huge_epsilon_accepts_found_periods() {
        let spec = SignalSpec::balanced(1.0, 50.0).with_harmonic(HarmonicSpec::new(7.5, 0.2, 0.0));
        let s = synth::synthesize(&spec, 0.1, DEFAULT_DT, 0).unwrap();
        let tr = omega_v(&s, &GeometryConfig::default()).unwrap();
        let est = detect_period(&tr, 0.0, 0.08).unwrap();
        assert!(gamma_prime(&s, &est, 1e300).unwrap().valid);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn endpoint_matches_integral_and_scales_quadratically(
            r in 0.6f64..1.8,
            phase in 0.0f64..std::f64::consts::TAU,
            h in 2u32..12,
            vh in 0.0f64..0.08,
            c in 0.2f64..5.0,
            anchor in 0.0f64..0.02,
        ) {
            let spec = SignalSpec::balanced(1.0, 50.0)
                .with_phase(phase)
                .with_unbalance(r)
                .with_harmonic(HarmonicSpec::new(h as f64 + 0.37, vh, 0.2));
            let s = synth::synthesize(&spec, 0.05, DEFAULT_DT, 0).unwrap();
            let tr = omega_v(&s, &GeometryConfig::default()).unwrap();
            let est = detect_period(&tr, anchor, 0.08).unwrap();
            prop_assume!(est.is_found());
            let sq = squared_magnitudes(&s).unwrap();
            let ep = endpoint_difference(&sq, &est, s.dt()).unwrap();
            let integral = gamma_prime_integral(&s, &est).unwrap();
            prop_assert!((ep - integral).abs() < 1e-6, "{} vs {}", ep, integral);

            let scaled = s.map_samples(|x| c * x);
            let sq2 = squared_magnitudes(&scaled).unwrap();
            let ep2 = endpoint_difference(&sq2, &est, s.dt()).unwrap();
            prop_assert!((ep2 - c * c * ep).abs() <= 1e-9 * (1.0 + ep.abs()));
        }
    }
}
