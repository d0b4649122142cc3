use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("derivative order {0} outside 1..=4")]
    InvalidOrder(usize),

    #[error("sobolev index {0} outside 0..=4")]
    InvalidSobolevIndex(usize),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("incompatible source: mean {mean:e} exceeds tolerance {tolerance:e}")]
    IncompatibleSource { mean: f64, tolerance: f64 },

    #[error("vacuum breach: minimum {min:e}{}", fmt_time(*.time))]
    VacuumBreach { min: f64, time: Option<f64> },

    #[error("blowup detected at t = {time}: max |value| = {max:e}")]
    Blowup { time: f64, max: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid initial data: {0}")]
    InvalidInit(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("time step {dt:e} exceeds stability limit {limit:e} ({reason})")]
    StepTooLarge {
        dt: f64,
        limit: f64,
        reason: &'static str,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("exact-match degenerate fit: error {0} is zero")]
    DegenerateFit(usize),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn fmt_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    /// Short machine-readable kind, used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid grid",
            Error::InvalidOrder(_) | Error::InvalidSobolevIndex(_) => "invalid order",
            Error::GridMismatch => "grid mismatch",
            Error::NonFinite => "non-finite field",
            Error::IncompatibleSource { .. } => "incompatible source",
            Error::VacuumBreach { .. } => "vacuum breach",
            Error::Blowup { .. } => "blowup detected",
            Error::InvalidParams(_) => "invalid parameters",
            Error::InvalidInit(_) => "invalid initial data",
            Error::InvalidScheme(_) => "invalid scheme",
            Error::StepTooLarge { .. } => "time step too large",
            Error::InvalidSweep(_) => "invalid sweep",
            Error::DegenerateFit(_) => "exact-match degenerate fit",
            Error::FitFailure(_) => "fit failure",
            Error::InvalidInput(_) => "invalid input",
        }
    }

    /// Time stamp carried by run-aborting errors.
    pub fn time(&self) -> Option<f64> {
        match self {
            Error::VacuumBreach { time, .. } => *time,
            Error::Blowup { time, .. } => Some(*time),
            _ => None,
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            Error::VacuumBreach { min, time: None } => Error::VacuumBreach { min, time: Some(t) },
            Error::Blowup { max, .. } => Error::Blowup { time: t, max },
            other => other,
        }
    }
}
