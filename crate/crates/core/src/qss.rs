//! Quasi-steady-state frequency over detected periods.
//!
//! `ω_QSS = (1/T) ∫_T ω_υ dτ`. Two estimators are exposed: the full vector
//! average ([`qss_vector`]) and the static-frame shortcut ([`qss_static`]),
//! whose magnitude is exactly `2π/T`. Estimates are timestamped at the
//! leading edge of their window.

use std::f64::consts::TAU;

use crate::circulation::{self, CirculationVerdict};
use crate::diffgeo::{self, GeometryConfig, OmegaTrace};
use crate::frames::AlphaBetaVector;
use crate::period::{CumulativeTrace, PeriodEstimate, HORIZON_FACTOR};
use crate::series::UniformSeries;
use crate::{Error, Result};

pub const DEFAULT_STRIDE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QssMethod {
    VectorAverage,
    StaticFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QssEstimate {
    /// Window anchor (leading edge).
    pub t: f64,
    pub omega_qss: AlphaBetaVector,
    /// `|ω_QSS| / 2π`.
    pub f_qss: f64,
    /// Period the average was taken over.
    pub period: f64,
    pub method: QssMethod,
}

impl QssEstimate {
    fn new(t: f64, omega_qss: AlphaBetaVector, period: f64, method: QssMethod) -> Self {
        Self { t, omega_qss, f_qss: omega_qss.norm() / TAU, period, method }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QssConfig {
    pub geometry: GeometryConfig,
    /// Nominal frequency, Hz; sets the initial period-search horizon.
    pub nominal_hz: f64,
    /// Circulation threshold, pu².
    pub epsilon: f64,
}

impl Default for QssConfig {
    fn default() -> Self {
        Self { geometry: GeometryConfig::default(), nominal_hz: 50.0, epsilon: circulation::EPSILON_SIMULATED }
    }
}

/// Direct trapezoidal `∫ ω_υ dτ` over a found window, skipping intervals with
/// an invalid end sample.
fn integrate_window(trace: &OmegaTrace, est: &PeriodEstimate) -> Result<AlphaBetaVector> {
    let (j, frac) = est.end_position(trace.dt()).ok_or(Error::PeriodNotFound(est.status.as_str()))?;
    let s = trace.samples();
    if j >= s.len() || (frac > 0.0 && j + 1 >= s.len()) {
        return Err(Error::OutsideTrace {
            t: est.t_start + est.period.unwrap_or(0.0),
            start: trace.t0(),
            end: trace.end_time(),
        });
    }
    let interval = |k: usize| {
        if s[k].valid && s[k + 1].valid {
            (s[k].omega + s[k + 1].omega) * (0.5 * trace.dt())
        } else {
            AlphaBetaVector::ZERO
        }
    };
    let mut acc = AlphaBetaVector::ZERO;
    for k in est.start_index..j {
        acc = acc + interval(k);
    }
    if frac > 0.0 {
        acc = acc + interval(j) * frac;
    }
    Ok(acc)
}

/// Component-wise mean of `ω_υ` over the detected period.
pub fn qss_vector(trace: &OmegaTrace, est: &PeriodEstimate) -> Result<QssEstimate> {
    let t = est.found_period()?;
    let integral = integrate_window(trace, est)?;
    Ok(QssEstimate::new(est.t_start, integral * (1.0 / t), t, QssMethod::VectorAverage))
}

/// `|ω_QSS| = 2π/T` along the mean unit direction of `ω_υ` in the window.
pub fn qss_static(trace: &OmegaTrace, est: &PeriodEstimate) -> Result<QssEstimate> {
    let t = est.found_period()?;
    let (j, _) = est.end_position(trace.dt()).expect("found estimate");
    let s = trace.samples();
    let end = (j + 1).min(s.len() - 1);
    let mut sum = AlphaBetaVector::ZERO;
    for o in &s[est.start_index..=end] {
        let m = o.omega.norm();
        if o.valid && m > 0.0 {
            sum = sum + o.omega * (1.0 / m);
        }
    }
    let m = sum.norm();
    let dir = if m > 0.0 { sum * (1.0 / m) } else { AlphaBetaVector::new(0.0, 0.0, 1.0) };
    Ok(QssEstimate::new(est.t_start, dir * (TAU / t), t, QssMethod::StaticFrame))
}

/// Everything computed at one anchor of the sliding window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorResult {
    pub period: PeriodEstimate,
    /// `|ω_υ| / 2π` at the anchor sample, Hz.
    pub f_inst: f64,
    pub vector: Option<QssEstimate>,
    pub static_frame: Option<QssEstimate>,
    pub verdict: CirculationVerdict,
}

/// Runs the full pipeline at every `stride`-th sample.
///
/// Anchors whose window runs past the end of the series report
/// `NotFoundWithinHorizon`.
pub fn analyze(series: &UniformSeries, stride: usize, cfg: &QssConfig) -> Result<Vec<AnchorResult>> {
    if stride == 0 {
        return Err(Error::param("stride must be at least one sample"));
    }
    if !(cfg.nominal_hz > 0.0) {
        return Err(Error::param("nominal frequency must be positive"));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::param("epsilon must be positive"));
    }
    let trace = diffgeo::omega_v(series, &cfg.geometry)?;
    let cum = CumulativeTrace::new(&trace);
    let sq = circulation::squared_magnitudes(series)?;
    let dt = series.dt();

    let mut horizon_period = 1.0 / cfg.nominal_hz;
    let mut out = Vec::with_capacity(series.len() / stride + 1);
    for i in (0..series.len()).step_by(stride) {
        let est = cum.detect(i, HORIZON_FACTOR * horizon_period)?;
        let anchor = &trace.samples()[i];
        let f_inst = if anchor.valid { anchor.omega.norm() / TAU } else { f64::NAN };
        let (vector, static_frame, verdict) = match est.period {
            Some(t) => {
                horizon_period = t;
                let omega = cum.vector_integral(&est).expect("window inside trace") * (1.0 / t);
                let dir = cum.mean_direction(&est).unwrap_or(AlphaBetaVector::new(0.0, 0.0, 1.0));
                let gp = circulation::endpoint_difference(&sq, &est, dt);
                let disc = cum.window_has_jump(&est);
                (
                    Some(QssEstimate::new(est.t_start, omega, t, QssMethod::VectorAverage)),
                    Some(QssEstimate::new(est.t_start, dir * (TAU / t), t, QssMethod::StaticFrame)),
                    CirculationVerdict::new(&est, gp, cfg.epsilon, disc),
                )
            }
            None => (None, None, CirculationVerdict::new(&est, None, cfg.epsilon, false)),
        };
        out.push(AnchorResult { period: est, f_inst, vector, static_frame, verdict });
    }
    Ok(out)
}

/// Vector-average QSS estimate and its circulation verdict at every anchor
/// where a period was found. Anchors without a period emit nothing.
pub fn qss_stream(
    series: &UniformSeries,
    stride: usize,
    cfg: &QssConfig,
) -> Result<Vec<(QssEstimate, CirculationVerdict)>> {
    Ok(analyze(series, stride, cfg)?.into_iter().filter_map(|a| a.vector.map(|q| (q, a.verdict))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::period::detect_period;
    use crate::synth::{self, Event, HarmonicSpec, SignalSpec, DEFAULT_DT};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn harmonic_spec() -> SignalSpec {
        SignalSpec::balanced(1.0, 50.0)
            .with_harmonic(HarmonicSpec::with_degrees(7.0, 0.0583, 210.0))
            .with_harmonic(HarmonicSpec::with_degrees(11.0, 0.0371, 330.0))
    }

    fn single(spec: &SignalSpec, t0: f64) -> (OmegaTrace, PeriodEstimate) {
        let s = synth::synthesize(spec, 0.08, DEFAULT_DT, 0).unwrap();
        let tr = diffgeo::omega_v(&s, &GeometryConfig::default()).unwrap();
        let est = detect_period(&tr, t0, 0.08).unwrap();
        (tr, est)
    }

    #[test]
    fn vector_average_on_examples() {
        let (tr, est) = single(&SignalSpec::balanced(1.0, 50.0), 0.0);
        let q = qss_vector(&tr, &est).unwrap();
        assert!((q.f_qss - 50.0).abs() < 1e-6);
        assert!((q.omega_qss.gamma - 100.0 * PI).abs() < 1e-4);
        assert!(q.omega_qss.alpha.abs() < 1e-9 && q.omega_qss.beta.abs() < 1e-9);

        let (tr, est) = single(&SignalSpec::balanced(1.0, 50.0).with_unbalance(1.5), 0.007);
        let mags: Vec<f64> = tr.samples().iter().map(|o| o.omega.norm()).collect();
        let (lo, hi) = mags.iter().fold((f64::MAX, 0.0f64), |(l, h), &m| (l.min(m), h.max(m)));
        let w = 100.0 * PI;
        assert!((lo - w / 1.5).abs() < 1e-3 * w && (hi - 1.5 * w).abs() < 1e-3 * w);
        assert!((qss_vector(&tr, &est).unwrap().f_qss - 50.0).abs() < 1e-3);

        let (tr, est) = single(&harmonic_spec(), 0.011);
        assert!((qss_vector(&tr, &est).unwrap().f_qss - 50.0).abs() < 1e-3);
    }

    #[test]
    fn static_frame_is_inverse_period() {
        let tr = OmegaTrace::new(0.0, 1e-3, Vec::new());
        for (t, f) in [(0.02, 50.0), (1.0 / 60.0, 60.0)] {
            let est = PeriodEstimate {
                t_start: 0.0,
                start_index: 0,
                period: Some(t),
                accumulated: TAU,
                status: crate::PeriodStatus::Found,
            };
            let synthetic = (0..100)
                .map(|k| diffgeo::OmegaSample {
                    t: k as f64 * 1e-3,
                    omega: AlphaBetaVector::new(0.0, 0.0, 314.0),
                    v_mag: 1.0,
                    jump: false,
                    valid: true,
                })
                .collect();
            let tr = OmegaTrace::new(0.0, 1e-3, synthetic);
            let q = qss_static(&tr, &est).unwrap();
            assert!((q.f_qss - f).abs() < 1e-12);
            assert_eq!(q.method, QssMethod::StaticFrame);
        }
        let none = PeriodEstimate {
            t_start: 0.0,
            start_index: 0,
            period: None,
            accumulated: 1.0,
            status: crate::PeriodStatus::NotFoundWithinHorizon,
        };
        assert!(qss_static(&tr, &none).is_err());
        assert!(qss_vector(&tr, &none).is_err());

        let (tr, est) = single(&harmonic_spec(), 0.004);
        let a = qss_vector(&tr, &est).unwrap().f_qss;
        let b = qss_static(&tr, &est).unwrap().f_qss;
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn stream_matches_single_window_route() {
        let spec = harmonic_spec().with_unbalance(1.2);
        let s = synth::synthesize(&spec, 0.08, DEFAULT_DT, 0).unwrap();
        let tr = diffgeo::omega_v(&s, &GeometryConfig::default()).unwrap();
        let stream = qss_stream(&s, 97, &QssConfig::default()).unwrap();
        assert!(!stream.is_empty());
        for (q, v) in &stream {
            let est = detect_period(&tr, q.t, HORIZON_FACTOR * 0.02).unwrap();
            let direct = qss_vector(&tr, &est).unwrap();
            assert!((direct.omega_qss - q.omega_qss).norm() < 1e-9);
            let g = circulation::gamma_prime(&s, &est, QssConfig::default().epsilon).unwrap();
            assert!((g.gamma_prime.unwrap() - v.gamma_prime.unwrap()).abs() < 1e-12);
            assert_eq!(g.valid, v.valid);
        }
    }

    #[test]
    fn stationary_stream_is_constant() {
        let s = synth::synth_balanced(&SignalSpec::balanced(1.0, 50.0), 0.06, DEFAULT_DT).unwrap();
        let out = qss_stream(&s, 1, &QssConfig::default()).unwrap();
        // every anchor whose window fits in the series
        assert!(out.len() >= 4000);
        assert!(out.iter().all(|(q, v)| (q.f_qss - 50.0).abs() < 1e-6 && v.valid));
    }

    #[test]
    fn ramp_tracks_window_average() {
        let spec = SignalSpec::balanced(1.0, 50.0).with_event(Event::FrequencyRamp {
            start: 0.0,
            end: 1.0 + DEFAULT_DT,
            rate: 1.0,
        });
        let s = synth::synthesize(&spec, 1.0, DEFAULT_DT, 0).unwrap();
        let out = qss_stream(&s, 1000, &QssConfig::default()).unwrap();
        assert!(out.len() > 90);
        for w in out.windows(2) {
            assert!(w[1].0.f_qss > w[0].0.f_qss);
        }
        for (q, _) in &out {
            // mean of f(t) = 50 + t over [t0, t0 + T]
            let expected = 50.0 + q.t + 0.5 * q.period;
            assert!((q.f_qss - expected).abs() < 0.05);
        }
    }

    #[test]
    fn dc_emits_nothing() {
        let dc = synth::synth_dc(AlphaBetaVector::new(1.0, 0.0, 0.0), 1.1, DEFAULT_DT).unwrap();
        assert!(qss_stream(&dc, 1000, &QssConfig::default()).unwrap().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn stationary_estimators_agree_and_scale(
            r in 0.7f64..1.6,
            phase in 0.0f64..std::f64::consts::TAU,
            vh in 0.0f64..0.1,
            c in 0.1f64..10.0,
        ) {
            let spec = SignalSpec::balanced(1.0, 50.0)
                .with_phase(phase)
                .with_unbalance(r)
                .with_harmonic(HarmonicSpec::new(7.0, vh, 1.1));
            let s = synth::synthesize(&spec, 0.045, DEFAULT_DT, 0).unwrap();
            let a = analyze(&s, 331, &QssConfig::default()).unwrap();
            let b = analyze(&s.map_samples(|x| c * x), 331, &QssConfig::default()).unwrap();
            let w = 100.0 * PI;
            for (x, y) in a.iter().zip(&b) {
                if let (Some(v), Some(st)) = (x.vector, x.static_frame) {
                    prop_assert!((v.omega_qss.norm() - w).abs() < 1e-3 * w);
                    prop_assert!((st.omega_qss.norm() - w).abs() < 1e-3 * w);
                    prop_assert!(v.omega_qss.gamma.abs() >= 0.999 * v.omega_qss.norm());
                    let vy = y.vector.unwrap();
                    prop_assert!((vy.f_qss - v.f_qss).abs() < 1e-9);
                }
            }
        }
    }
}
