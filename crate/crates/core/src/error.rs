use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes; the CLI maps these onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments supplied by the caller.
    Validation,
    /// Input data violates a domain invariant.
    Data,
    /// A numerical routine failed or degenerated.
    Numeric,
    /// Transport or filesystem trouble.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("non-positive close {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: NaiveDate,
        value: f64,
    },
    #[error("duplicate date {date} for {ticker}")]
    DuplicateDate { ticker: String, date: NaiveDate },
    #[error("keyword {0:?} is not in the configured keyword set")]
    UnknownKeyword(String),
    #[error("aligned calendar is empty")]
    EmptyCalendar,
    #[error("every series exceeded the missing-data threshold")]
    AllSeriesDropped,
    #[error("no token matched the lexicon")]
    NoLexiconHit,
    #[error("invalid lexicon entry at line {line}: {message}")]
    InvalidLexicon { line: u64, message: String },

    #[error("series needs at least {needed} observations, got {got}")]
    DegenerateSeries { needed: usize, got: usize },
    #[error("zero variance in series {label:?}")]
    ZeroVariance { label: String },
    #[error("ratio Q = T/N must be at least 1, got {0}")]
    InvalidRatio(f64),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    ConvergenceFailure { sweeps: usize, residual: f64 },
    #[error("vector is not unit-norm (norm {0})")]
    NotNormalized(f64),
    #[error("window of {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("student-t fit reached the search boundary at a = {value}")]
    FitDiverged { value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("panels are on different calendars")]
    CalendarMismatch,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("baseline structure is zero; relative change undefined")]
    DegenerateBaseline,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("series of length {len} too short for histories k={k}, l={l}")]
    SeriesTooShort { len: usize, k: usize, l: usize },
    #[error("all {0} samples had empty conditioning boxes")]
    AllSamplesSkipped(usize),
    #[error("off-diagonal entries span no range")]
    DegenerateRange,

    #[error("authentication rejected by endpoint (HTTP {0})")]
    Auth(u16),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("network error: {0}")]
    Network(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidRatio(_) | InvalidInput(_) | WindowTooLong { .. } | ShapeMismatch(_) => {
                ErrorKind::Validation
            }
            Parse { .. }
            | NonPositivePrice { .. }
            | DuplicateDate { .. }
            | UnknownKeyword(_)
            | EmptyCalendar
            | AllSeriesDropped
            | NoLexiconHit
            | InvalidLexicon { .. }
            | DegenerateSeries { .. }
            | ZeroVariance { .. }
            | CalendarMismatch
            | SeriesTooShort { .. }
            | DegenerateRange
            | DegenerateBaseline => ErrorKind::Data,
            ConvergenceFailure { .. }
            | NotNormalized(_)
            | FitDiverged { .. }
            | NotPsd { .. }
            | AllSamplesSkipped(_) => ErrorKind::Numeric,
            Auth(_) | RateLimited { .. } | Network(_) | Io(_) | Json(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
