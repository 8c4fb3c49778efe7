use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("coefficient count {got} does not match level {level} (expected {expected})")]
    BadLength { level: u32, expected: usize, got: usize },

    #[error("grid mismatch: ({0} nodes, L = {1}) vs ({2} nodes, L = {3})")]
    GridMismatch(usize, f64, usize, f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("Lagrangian density needs the time derivative s_t")]
    MissingTimeDerivative,

    #[error("blow-up at step {step} (t = {t}): max |u| = {max_abs}")]
    BlowUp { step: usize, t: f64, max_abs: f64 },

    #[error("incommensurate shift at t = {time}: c*t must be a multiple of {spacing} (admissible times are multiples of {admissible_dt})")]
    Incommensurate { time: f64, spacing: f64, admissible_dt: f64 },

    #[error("generator D(e{i}, e{j}) does not fix v: |D(v)| = {defect:e}")]
    StabilizerViolation { i: usize, j: usize, defect: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { field: field.to_string(), reason: reason.into() }
    }

    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LevelMismatch(..) | Error::BadLength { .. } => "level_mismatch",
            Error::GridMismatch(..) => "grid_mismatch",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidArgument { .. } => "invalid_argument",
            Error::MissingTimeDerivative => "missing_time_derivative",
            Error::BlowUp { .. } => "blow_up",
            Error::Incommensurate { .. } => "incommensurate",
            Error::StabilizerViolation { .. } => "stabilizer_violation",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
