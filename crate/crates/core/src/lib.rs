//! Quasi-steady-state (QSS) frequency estimation for three-phase voltages.
//!
//! The voltage vector in the stationary αβγ frame is treated as the velocity
//! of a space curve. Its rotation rate `ω_υ = υ × υ′ / |υ|²` is the
//! instantaneous geometric frequency. Integrating `|ω_υ|` until it reaches 2π
//! yields the geometric period `T`, and averaging `ω_υ` over that period gives
//! the QSS frequency. The time derivative of circulation, `Γ′ = |υ(T)|² − |υ(0)|²`,
//! decides whether the trajectory actually closed and the estimate is meaningful.
//!
//! ```
//! use qssfreq::{synth, qss::{self, QssConfig}};
//!
//! let spec = synth::SignalSpec::balanced(1.0, 50.0);
//! let series = synth::synth_balanced(&spec, 0.1, 1e-5).unwrap();
//! let out = qss::qss_stream(&series, 100, &QssConfig::default()).unwrap();
//! assert!(out.iter().all(|(est, verdict)| (est.f_qss - 50.0).abs() < 1e-4 && verdict.valid));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting guards

pub mod circulation;
pub mod cli;
pub mod diffgeo;
pub mod epitrochoid;
mod error;
pub mod frames;
pub mod io;
pub mod period;
pub mod pll;
pub mod qss;
pub mod series;
pub mod special;
pub mod synth;

pub use circulation::{gamma_prime, validity_trace, CirculationGate, CirculationVerdict};
pub use diffgeo::{GeometryConfig, OmegaSample, OmegaTrace};
pub use error::{Error, Result};
pub use frames::{clarke, clarke_series, AlphaBetaVector, ThreePhaseFrame};
pub use period::{detect_period, period_track, PeriodEstimate, PeriodStatus};
pub use qss::{qss_static, qss_stream, qss_vector, QssConfig, QssEstimate, QssMethod};
pub use series::UniformSeries;
