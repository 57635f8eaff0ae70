//! Python bindings for `qssfreq`.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qssfreq::diffgeo::{self, GeometryConfig};
use qssfreq::epitrochoid;
use qssfreq::io::{self as csvio, Frame, GeneratorSpec};
use qssfreq::pll::{self, PllConfig};
use qssfreq::qss::{self, QssConfig};
use qssfreq::synth::HarmonicSpec;
use qssfreq::UniformSeries;

fn err(e: qssfreq::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Uniformly sampled multi-channel time series.
#[pyclass(name = "Series", module = "qssfreq", frozen)]
struct PySeries(UniformSeries);

#[pymethods]
impl PySeries {
    /// Builds an αβγ series; `gamma` defaults to zeros.
    #[staticmethod]
    #[pyo3(signature = (t0, dt, alpha, beta, gamma=None))]
    fn from_alphabeta(t0: f64, dt: f64, alpha: Vec<f64>, beta: Vec<f64>, gamma: Option<Vec<f64>>) -> PyResult<Self> {
        let gamma = gamma.unwrap_or_else(|| vec![0.0; alpha.len()]);
        UniformSeries::new(t0, dt, vec![("valpha", alpha), ("vbeta", beta), ("vgamma", gamma)]).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, frame="auto", dt=None))]
    fn read_csv(path: PathBuf, frame: &str, dt: Option<f64>) -> PyResult<Self> {
        let frame: Frame = frame.parse().map_err(err)?;
        csvio::read_csv_path(&path, frame, dt).map(Self).map_err(err)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        csvio::write_series_csv(&self.0, std::io::BufWriter::new(file)).map_err(err)
    }

    /// Per-unit copy and the base used.
    #[pyo3(signature = (vbase=None))]
    fn normalize(&self, vbase: Option<f64>) -> PyResult<(Self, f64)> {
        csvio::normalize(&self.0, vbase).map(|(s, b)| (Self(s), b)).map_err(err)
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    fn times(&self) -> Vec<f64> {
        (0..self.0.len()).map(|k| self.0.time(k)).collect()
    }

    fn channel(&self, name: &str) -> PyResult<Vec<f64>> {
        self.0
            .channel_by_name(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| PyValueError::new_err(format!("no channel named '{name}'")))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Series(len={}, dt={}, names={:?})", self.0.len(), self.0.dt(), self.0.names())
    }
}

/// One QSS estimate together with its circulation verdict.
#[pyclass(name = "QssEstimate", module = "qssfreq", frozen, get_all)]
struct PyQssEstimate {
    t: f64,
    f_qss: f64,
    period: f64,
    omega: (f64, f64, f64),
    gamma_prime: Option<f64>,
    discontinuous: bool,
    valid: bool,
}

#[pymethods]
impl PyQssEstimate {
    fn __repr__(&self) -> String {
        format!(
            "QssEstimate(t={}, f_qss={}, period={}, gamma_prime={:?}, valid={})",
            self.t, self.f_qss, self.period, self.gamma_prime, self.valid
        )
    }
}

fn qss_config(epsilon: f64, nominal_hz: f64, v_floor: f64) -> QssConfig {
    QssConfig { geometry: GeometryConfig { v_floor, ..GeometryConfig::default() }, nominal_hz, epsilon }
}

/// Generates a waveform from a preset name or a generator spec document.
#[pyfunction]
#[pyo3(signature = (preset=None, spec=None, span=None, dt=None, seed=None))]
fn synthesize(
    preset: Option<&str>,
    spec: Option<&str>,
    span: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
) -> PyResult<PySeries> {
    let mut g = match (preset, spec) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give either preset or spec, not both")),
        (_, Some(text)) => GeneratorSpec::parse(text).map_err(err)?,
        (p, None) => GeneratorSpec::preset(p.unwrap_or("balanced")).map_err(err)?,
    };
    g.span = span.unwrap_or(g.span);
    g.dt = dt.unwrap_or(g.dt);
    g.seed = seed.unwrap_or(g.seed);
    g.generate().map(PySeries).map_err(err)
}

/// `(α, β, γ)` of one three-phase sample.
#[pyfunction]
fn clarke(va: f64, vb: f64, vc: f64) -> (f64, f64, f64) {
    let v = qssfreq::clarke(&qssfreq::ThreePhaseFrame::new(0.0, va, vb, vc));
    (v.alpha, v.beta, v.gamma)
}

/// `(t, ωα, ωβ, ωγ, valid)`.
type OmegaRow = (f64, f64, f64, f64, bool);

/// Instantaneous geometric frequency, one row per sample.
#[pyfunction]
#[pyo3(signature = (series, v_floor=1e-6))]
fn omega_v(series: &PySeries, v_floor: f64) -> PyResult<Vec<OmegaRow>> {
    let cfg = GeometryConfig { v_floor, ..GeometryConfig::default() };
    let tr = diffgeo::omega_v(&series.0, &cfg).map_err(err)?;
    Ok(tr.samples().iter().map(|o| (o.t, o.omega.alpha, o.omega.beta, o.omega.gamma, o.valid)).collect())
}

/// Geometric period from `t_start`: `(period or None, status)`.
#[pyfunction]
#[pyo3(signature = (series, t_start, horizon, v_floor=1e-6))]
fn detect_period(series: &PySeries, t_start: f64, horizon: f64, v_floor: f64) -> PyResult<(Option<f64>, String)> {
    let cfg = GeometryConfig { v_floor, ..GeometryConfig::default() };
    let tr = diffgeo::omega_v(&series.0, &cfg).map_err(err)?;
    let est = qssfreq::detect_period(&tr, t_start, horizon).map_err(err)?;
    Ok((est.period, est.status.as_str().to_owned()))
}

/// QSS estimates at every `stride`-th sample where a period was found.
#[pyfunction]
#[pyo3(signature = (series, stride=10, epsilon=1e-2, nominal_hz=50.0, v_floor=1e-6))]
fn qss_stream(
    series: &PySeries,
    stride: usize,
    epsilon: f64,
    nominal_hz: f64,
    v_floor: f64,
) -> PyResult<Vec<PyQssEstimate>> {
    let out = qss::qss_stream(&series.0, stride, &qss_config(epsilon, nominal_hz, v_floor)).map_err(err)?;
    Ok(out
        .into_iter()
        .map(|(q, v)| PyQssEstimate {
            t: q.t,
            f_qss: q.f_qss,
            period: q.period,
            omega: (q.omega_qss.alpha, q.omega_qss.beta, q.omega_qss.gamma),
            gamma_prime: v.gamma_prime,
            discontinuous: v.discontinuous,
            valid: v.valid,
        })
        .collect())
}

/// Low-passed SRF-PLL frequency in Hz, one value per sample.
#[pyfunction]
#[pyo3(signature = (series, kp=92.0, ki=4240.0, nominal_hz=50.0, lp_cutoff=20.0))]
fn pll_track(series: &PySeries, kp: f64, ki: f64, nominal_hz: f64, lp_cutoff: f64) -> PyResult<Vec<f64>> {
    let cfg = PllConfig { kp, ki, lp_cutoff, ..PllConfig::default() }.with_nominal_hz(nominal_hz);
    pll::pll_track(&series.0, &cfg).map(|s| s.channel(0).to_vec()).map_err(err)
}

/// Epitrochoid classification of a fundamental plus one harmonic.
#[pyfunction]
fn classify<'py>(py: Python<'py>, v: f64, h: f64, vh: f64) -> PyResult<Bound<'py, PyDict>> {
    let (p, c) = epitrochoid::classify(v, &HarmonicSpec::new(h, vh, 0.0)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("kind", c.kind.as_str())?;
    d.set_item("crunodes_expected", c.crunodes_expected)?;
    d.set_item("critical_angles", c.critical_angles)?;
    d.set_item("d", p.d)?;
    d.set_item("r", p.r)?;
    d.set_item("R", p.big_r)?;
    d.set_item("n_critical", p.n_critical)?;
    Ok(d)
}

/// Number of crossings of the closed polyline through `points`.
#[pyfunction]
fn count_self_intersections(points: Vec<(f64, f64)>) -> PyResult<usize> {
    let pts: Vec<[f64; 2]> = points.into_iter().map(|(x, y)| [x, y]).collect();
    epitrochoid::count_self_intersections(&pts).map_err(err)
}

#[pymodule(name = "qssfreq")]
fn qssfreq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyQssEstimate>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(clarke, m)?)?;
    m.add_function(wrap_pyfunction!(omega_v, m)?)?;
    m.add_function(wrap_pyfunction!(detect_period, m)?)?;
    m.add_function(wrap_pyfunction!(qss_stream, m)?)?;
    m.add_function(wrap_pyfunction!(pll_track, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(count_self_intersections, m)?)?;
    Ok(())
}
