use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target truncation too small: lost weight {lost:.3e} exceeds {limit:.1e}")]
    LostWeight { lost: f64, limit: f64 },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("norm drift {drift:.3e} at t = {t} exceeds {limit:.1e}; reduce the step size")]
    NormDrift { drift: f64, t: f64, limit: f64 },

    #[error("overlap matrix condition number {cond:.3e} exceeds cap {cap:.1e}; use a sparser or smaller lattice")]
    ConditionCap { cond: f64, cap: f64 },

    #[error("Hilbert-space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("no sign change of the xi equation in [{lo}, {hi}] (A = {amplitude})")]
    NoRoot { lo: f64, hi: f64, amplitude: f64 },

    #[error("frequency {omega} is not on a harmonic line: nearest lines are {below} and {above}")]
    Unclassifiable { omega: f64, below: f64, above: f64 },

    #[error("amplitude {amplitude} of mode {mode} lies outside the lattice coverage; extend the lattice by {extra} points per side")]
    Coverage { mode: usize, amplitude: String, extra: usize },

    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Aborts raised by numerical guards (as opposed to bad input).
    pub fn is_physics_guard(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. }
                | Error::ConditionCap { .. }
                | Error::LostWeight { .. }
                | Error::NoRoot { .. }
        )
    }

    pub(crate) fn config(field: &str, msg: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), msg: msg.into() }
    }
}
