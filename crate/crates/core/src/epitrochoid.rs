//! Epitrochoid taxonomy of fundamental-plus-one-harmonic trajectories and an
//! empirical self-intersection (crunode) detector.
//!
//! A voltage `V e^{iθ} + V_h e^{i(hθ+φ)}` traces the epitrochoid with fixed
//! circle radius `R = V(1 − 1/h)`, rolling radius `r = V/h` and pen distance
//! `d = V_h`. Loops, and with them crunodes, appear iff `d > r`.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use crate::series::UniformSeries;
use crate::special;
use crate::synth::HarmonicSpec;
use crate::{Error, Result};

/// Relative tolerance for the `d = r` tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpitrochoidParams {
    /// Pen distance, `V_h`.
    pub d: f64,
    /// Rolling circle radius, `V/h`.
    pub r: f64,
    /// Fixed circle radius, `V(1 − 1/h)`.
    pub big_r: f64,
    pub h: u32,
    /// Number of critical points, `h − 1`.
    pub n_critical: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    Curtate,
    Epicycloid,
    Prolate,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Curtate => "curtate",
            Self::Epicycloid => "epicycloid",
            Self::Prolate => "prolate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryClass {
    pub kind: TrajectoryKind,
    pub crunodes_expected: bool,
    /// `θ = 2nπ/(h − 1)` for `n = 0..h−2`.
    pub critical_angles: Vec<f64>,
}

/// Classifies the trajectory of a fundamental of amplitude `v` plus one
/// integer-order harmonic.
pub fn classify(v: f64, harmonic: &HarmonicSpec) -> Result<(EpitrochoidParams, TrajectoryClass)> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(format!("fundamental amplitude must be positive, got {v}")));
    }
    let h = harmonic.order;
    if !(h >= 2.0) || h.fract() != 0.0 || h > f64::from(u32::MAX) {
        return Err(Error::param(format!("harmonic order must be an integer of at least 2, got {h}")));
    }
    let vh = harmonic.amplitude;
    if !(vh >= 0.0) || !vh.is_finite() {
        return Err(Error::param(format!("harmonic amplitude must be non-negative, got {vh}")));
    }
    let hn = h as u32;
    let params = EpitrochoidParams { d: vh, r: v / h, big_r: v * (1.0 - 1.0 / h), h: hn, n_critical: hn - 1 };
    // d vs r, scaled by h to keep the tie exact for representable inputs
    let lhs = vh * h;
    let kind = if (lhs - v).abs() <= TIE_TOLERANCE * v {
        TrajectoryKind::Epicycloid
    } else if lhs > v {
        TrajectoryKind::Prolate
    } else {
        TrajectoryKind::Curtate
    };
    let critical_angles = (0..hn - 1).map(|n| TAU * f64::from(n) / f64::from(hn - 1)).collect();
    Ok((params, TrajectoryClass { kind, crunodes_expected: kind == TrajectoryKind::Prolate, critical_angles }))
}

/// `(α, β)` samples covering `[t_start, t_start + period)`.
///
/// The closing sample at `t_start + period` is left out; polylines are
/// treated as closed by the intersection routines.
pub fn period_polyline(series: &UniformSeries, t_start: f64, period: f64) -> Result<Vec<[f64; 2]>> {
    let [a, b, _] = series.three_channels()?;
    let start = series.index_of(t_start).ok_or(Error::OutsideTrace {
        t: t_start,
        start: series.t0(),
        end: series.end_time(),
    })?;
    if !(period > 0.0) {
        return Err(Error::param("period must be positive"));
    }
    let n = (period / series.dt()).round() as usize;
    if start + n > series.len() {
        return Err(Error::OutsideTrace { t: t_start + period, start: series.t0(), end: series.end_time() });
    }
    Ok((start..start + n).map(|k| [a[k], b[k]]).collect())
}

fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

/// Proper crossing of segments `pq` and `rs` (touching does not count).
fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let d1 = orient(p, q, r);
    let d2 = orient(p, q, s);
    let d3 = orient(r, s, p);
    let d4 = orient(r, s, q);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Visits every crossing pair of non-adjacent segments of the closed polyline.
///
/// Exact: segments are sorted by their left x-extent and each is tested
/// against those whose x-extent overlaps it.
fn for_each_crossing(points: &[[f64; 2]], mut visit: impl FnMut(usize, usize) -> bool) -> Result<()> {
    let n = points.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, have: n });
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSeries("polyline contains non-finite points".into()));
    }
    let seg = |i: usize| (points[i], points[(i + 1) % n]);
    let extent = |i: usize| {
        let (p, q) = seg(i);
        (p[0].min(q[0]), p[0].max(q[0]), p[1].min(q[1]), p[1].max(q[1]))
    };
    let ext: Vec<_> = (0..n).map(extent).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ext[i].0.partial_cmp(&ext[j].0).unwrap_or(Ordering::Equal));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let (xmin, _, ymin, ymax) = ext[i];
        active.retain(|&j| ext[j].1 >= xmin);
        for &j in &active {
            let gap = i.abs_diff(j);
            if gap <= 1 || gap == n - 1 {
                continue;
            }
            if ext[j].3 < ymin || ext[j].2 > ymax {
                continue;
            }
            let (p, q) = seg(i);
            let (r, s) = seg(j);
            if segments_cross(p, q, r, s) && !visit(i.min(j), i.max(j)) {
                return Ok(());
            }
        }
        active.push(i);
    }
    Ok(())
}

/// Whether any two non-adjacent segments of the closed polyline cross.
pub fn detect_self_intersection(points: &[[f64; 2]]) -> Result<bool> {
    let mut found = false;
    for_each_crossing(points, |_, _| {
        found = true;
        false
    })?;
    Ok(found)
}

/// Number of crossing segment pairs of the closed polyline.
pub fn count_self_intersections(points: &[[f64; 2]]) -> Result<usize> {
    let mut count = 0;
    for_each_crossing(points, |_, _| {
        count += 1;
        true
    })?;
    Ok(count)
}

/// `∫ |υ| dτ` over one period of an ellipse with semi-axes `va`, `vb`
/// traversed at angular frequency `omega`.
pub fn ellipse_arc_length(va: f64, vb: f64, omega: f64) -> Result<f64> {
    let (a, b) = (va.abs().max(vb.abs()), va.abs().min(vb.abs()));
    if !(omega > 0.0) || a == 0.0 {
        return Err(Error::param("ellipse needs a positive frequency and a non-zero axis"));
    }
    Ok(4.0 * a / omega * special::ellip_e(1.0 - (b / a).powi(2))?)
}

/// `∫ |υ| dτ` over one fundamental period of `V e^{iθ} + V_h e^{i(hθ+φ)}`
/// with integer `h ≥ 2`; `|υ|² = V² + V_h² + 2 V V_h cos((h−1)θ + φ)`.
pub fn harmonic_arc_length(v: f64, harmonic: &HarmonicSpec, omega: f64) -> Result<f64> {
    classify(v, harmonic)?;
    if !(omega > 0.0) {
        return Err(Error::param("frequency must be positive"));
    }
    let vh = harmonic.amplitude;
    let s = v + vh;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * s / omega * special::ellip_e((4.0 * v * vh / (s * s)).min(1.0))?)
}
