use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("expected {expected} channels, found {found}")]
    ChannelCount { expected: usize, found: usize },

    #[error("series too short: need at least {needed} samples, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} s lies outside the trace [{start}, {end}] s")]
    OutsideTrace { t: f64, start: f64, end: f64 },

    #[error("period not found ({0})")]
    PeriodNotFound(&'static str),

    #[error("overlapping {0} events")]
    OverlappingEvents(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
