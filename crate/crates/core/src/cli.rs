//! Command-line front end: `synth`, `estimate`, `classify` and `validate`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::circulation::EPSILON_SIMULATED;
use crate::diffgeo::GeometryConfig;
use crate::epitrochoid;
use crate::frames;
use crate::io::{self as csvio, EstimateRecord, Frame, GeneratorSpec};
use crate::pll::{self, PllConfig};
use crate::qss::{self, QssConfig, DEFAULT_STRIDE};
use crate::series::UniformSeries;
use crate::synth::HarmonicSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    QssVector,
    QssStatic,
    Pll,
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "qss_vector" => Ok(Self::QssVector),
            "qss_static" => Ok(Self::QssStatic),
            "pll" => Ok(Self::Pll),
            _ => Err(format!("unknown estimator '{s}' (expected qss_vector, qss_static or pll)")),
        }
    }
}

/// Where the waveform comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Input { path: PathBuf, frame: Frame, dt: Option<f64> },
    Generator(GeneratorSpec),
}

/// Settings of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub stride: usize,
    pub epsilon: f64,
    pub v_floor: f64,
    pub v_base: Option<f64>,
    pub nominal_hz: f64,
    pub estimators: BTreeSet<Estimator>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    fn qss_config(&self) -> QssConfig {
        QssConfig {
            geometry: GeometryConfig { v_floor: self.v_floor, ..GeometryConfig::default() },
            nominal_hz: self.nominal_hz,
            epsilon: self.epsilon,
        }
    }

    fn load(&self) -> Result<UniformSeries> {
        let raw = match &self.source {
            Source::Input { path, frame, dt } => csvio::read_csv_path(path, *frame, *dt)?,
            Source::Generator(g) => g.generate()?,
        };
        Ok(csvio::normalize(&raw, self.v_base)?.0)
    }
}

/// Pipeline output for a per-unit series: one record per anchor.
///
/// `f_qss` comes from the vector average when selected, else from the static
/// frame estimator. Records whose period was not found carry no `f_qss`.
pub fn estimate_records(series: &UniformSeries, cfg: &RunConfig) -> Result<Vec<EstimateRecord>> {
    let anchors = qss::analyze(series, cfg.stride, &cfg.qss_config())?;
    let f_pll = if cfg.estimators.contains(&Estimator::Pll) {
        let pcfg = PllConfig::default().with_nominal_hz(cfg.nominal_hz);
        Some(pll::pll_track(series, &pcfg)?)
    } else {
        None
    };
    let use_vector = cfg.estimators.contains(&Estimator::QssVector);
    let use_static = cfg.estimators.contains(&Estimator::QssStatic);
    Ok(anchors
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let q = if use_vector {
                a.vector
            } else if use_static {
                a.static_frame
            } else {
                None
            };
            EstimateRecord {
                t: a.period.t_start,
                f_inst: a.f_inst,
                f_pll: f_pll.as_ref().map(|p| p.channel(0)[n * cfg.stride]),
                f_qss: q.map(|q| q.f_qss),
                period: a.period.period,
                gamma_prime: a.verdict.gamma_prime,
                valid: a.verdict.valid && q.is_some(),
            }
        })
        .collect())
}

#[derive(Debug, Parser)]
#[command(name = "qssfreq", version, about = "Geometric QSS frequency estimation for three-phase voltages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a waveform CSV from a preset or a generator spec file.
    Synth(SynthArgs),
    /// Run the estimation pipeline and write one record per anchor.
    Estimate(EstimateArgs),
    /// Classify a fundamental-plus-harmonic trajectory.
    Classify(ClassifyArgs),
    /// Recompute the circulation gate and summarise the validity trace.
    Validate(EstimateArgs),
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    /// Named scenario.
    #[arg(long)]
    preset: Option<String>,
    /// Generator spec document (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Duration, s.
    #[arg(long)]
    span: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl GeneratorArgs {
    fn given(&self) -> bool {
        self.preset.is_some() || self.spec.is_some()
    }

    fn build(&self, dt: Option<f64>) -> Result<GeneratorSpec> {
        let mut g = match (&self.preset, &self.spec) {
            (_, Some(path)) => GeneratorSpec::parse(&fs::read_to_string(path)?)?,
            (Some(p), None) => GeneratorSpec::preset(p)?,
            (None, None) => GeneratorSpec::preset("balanced")?,
        };
        if let Some(s) = self.span {
            g.span = s;
        }
        if let Some(d) = dt {
            g.dt = d;
        }
        if let Some(s) = self.seed {
            g.seed = s;
        }
        Ok(g)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Sample time, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Output frame: alphabeta or abc.
    #[arg(long, default_value = "alphabeta")]
    frame: Frame,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Waveform CSV.
    #[arg(long, conflicts_with_all = ["preset", "spec"])]
    input: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Input frame: auto, abc or alphabeta.
    #[arg(long, default_value = "auto")]
    frame: Frame,
    /// Sample time override, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Anchor spacing, samples.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    /// Circulation threshold, pu².
    #[arg(long, default_value_t = EPSILON_SIMULATED)]
    epsilon: f64,
    /// Magnitude below which ω is undefined, pu.
    #[arg(long, default_value_t = GeometryConfig::default().v_floor)]
    vfloor: f64,
    /// Per-unit base; the largest |υ| of the input when absent.
    #[arg(long)]
    vbase: Option<f64>,
    /// Nominal frequency, Hz.
    #[arg(long, default_value_t = 50.0)]
    fnominal: f64,
    /// Comma-separated subset of qss_vector, qss_static, pll.
    #[arg(long, value_delimiter = ',', default_value = "qss_vector,pll")]
    estimators: Vec<Estimator>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl EstimateArgs {
    fn config(&self) -> Result<RunConfig> {
        let source = match &self.input {
            Some(path) => Source::Input { path: path.clone(), frame: self.frame, dt: self.dt },
            None if self.generator.given() => Source::Generator(self.generator.build(self.dt)?),
            None => return Err(Error::param("one of --input, --preset or --spec is required")),
        };
        if !(self.epsilon > 0.0) {
            return Err(Error::param("--epsilon must be positive"));
        }
        if !(self.vfloor >= 0.0) {
            return Err(Error::param("--vfloor must be non-negative"));
        }
        Ok(RunConfig {
            source,
            stride: self.stride,
            epsilon: self.epsilon,
            v_floor: self.vfloor,
            v_base: self.vbase,
            nominal_hz: self.fnominal,
            estimators: self.estimators.iter().copied().collect(),
            output: self.output.clone(),
        })
    }
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Fundamental amplitude.
    #[arg(long)]
    v: f64,
    /// Harmonic order.
    #[arg(long)]
    h: f64,
    /// Harmonic amplitude.
    #[arg(long)]
    vh: f64,
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn synth(args: &SynthArgs) -> Result<()> {
    let series = args.generator.build(args.dt)?.generate()?;
    let series = match args.frame {
        Frame::Abc => frames::inverse_clarke_series(&series)?,
        Frame::AlphaBeta => series,
        Frame::Auto => return Err(Error::param("--frame for synth must be abc or alphabeta")),
    };
    let mut out = open_output(&args.output)?;
    csvio::write_series_csv(&series, &mut out)?;
    out.flush()?;
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = args.config()?;
    let records = estimate_records(&cfg.load()?, &cfg)?;
    let mut out = open_output(&cfg.output)?;
    csvio::write_estimates(&records, &mut out)?;
    out.flush()?;
    Ok(())
}

fn classify(args: &ClassifyArgs) -> Result<()> {
    let (p, c) = epitrochoid::classify(args.v, &HarmonicSpec::new(args.h, args.vh, 0.0))?;
    let prediction = if c.crunodes_expected { "crunodes expected" } else { "no crunodes expected" };
    println!("{}, {prediction}", c.kind.as_str());
    println!("d = {}, r = {}, R = {}, critical points = {}", p.d, p.r, p.big_r, p.n_critical);
    Ok(())
}

fn validate(args: &EstimateArgs) -> Result<()> {
    let cfg = args.config()?;
    let series = cfg.load()?;
    let anchors = qss::analyze(&series, cfg.stride, &cfg.qss_config())?;
    let valid = anchors.iter().filter(|a| a.verdict.valid).count();
    let found = anchors.iter().filter(|a| a.period.is_found()).count();
    let mut out = open_output(&cfg.output)?;
    writeln!(
        out,
        "anchors {}, periods found {found}, valid {valid}, invalid {}",
        anchors.len(),
        anchors.len() - valid
    )?;
    writeln!(out, "epsilon {:e} pu^2", cfg.epsilon)?;
    // runs of equal validity
    let mut start = 0;
    for k in 1..=anchors.len() {
        if k == anchors.len() || anchors[k].verdict.valid != anchors[start].verdict.valid {
            let label = if anchors[start].verdict.valid { "valid" } else { "invalid" };
            writeln!(out, "{label} {:e} {:e}", anchors[start].period.t_start, anchors[k - 1].period.t_start)?;
            start = k;
        }
    }
    out.flush()?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OutsideTrace { .. } | Error::PeriodNotFound(_) => 2,
        _ => 1,
    }
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit code: 0 on success, 1 on input or usage errors, 2 on internal
/// failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => estimate(a),
        Command::Classify(a) => classify(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qssfreq: {e}");
            exit_code(&e)
        }
    }
}
