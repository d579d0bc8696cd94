use thiserror::Error;

/// Every failure the solvers and the I/O layer can report.
///
/// Each variant carries a stable machine-readable code (see [`Error::code`])
/// and is classified as either an input problem or a solver problem, which
/// the command-line front end maps onto exit codes 2 and 1.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid reduction: keep={keep} for a distribution of length {len}")]
    InvalidReduction { keep: usize, len: usize },

    #[error("index order: expected s_hi > s_lo, got s_hi={s_hi}, s_lo={s_lo}")]
    IndexOrder { s_hi: usize, s_lo: usize },

    #[error("index {index} out of range for {len} states")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown action '{0}'")]
    UnknownAction(String),

    #[error("epsilon {eps} too large: perturbation must stay inside the open simplex (limit {limit})")]
    EpsilonTooLarge { eps: f64, limit: f64 },

    #[error("no bracket: {0}")]
    NoBracket(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: cost decreases without bound along direction {direction:?}")]
    Unbounded { direction: Vec<f64> },

    #[error("negative multiplier: {0}")]
    NegativeMultiplier(String),

    #[error("KKT degeneracy at state {state}: coefficient {coefficient} leaves no interior optimum")]
    KktDegeneracy { state: usize, coefficient: f64 },

    #[error("w1={w1} lies outside the admissible branch ({which})")]
    OutOfBranch { w1: f64, which: &'static str },

    #[error("no root of the scalar wage equation inside the admissible branch: {0}")]
    NoRootInBranch(String),

    #[error("negative IC multiplier mu={mu}: incentive constraint is slack")]
    NegativeMu { mu: f64 },

    #[error("range error: {0}")]
    RangeError(String),

    #[error("no grid point satisfies the constraints")]
    NoFeasiblePoint,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("dimension error: {0}")]
    DimensionError(String),

    #[error("no regime flip in [{lo}, {hi}]")]
    NoFlipInRange { lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable error code used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "E_LENGTH_MISMATCH",
            Error::InvalidDistribution(_) => "E_INVALID_DISTRIBUTION",
            Error::InvalidReduction { .. } => "E_INVALID_REDUCTION",
            Error::IndexOrder { .. } => "E_INDEX_ORDER",
            Error::IndexOutOfRange { .. } => "E_INDEX_RANGE",
            Error::DomainError(_) => "E_DOMAIN",
            Error::Validation { .. } => "E_VALIDATION",
            Error::Parse(_) => "E_PARSE",
            Error::UnknownAction(_) => "E_UNKNOWN_ACTION",
            Error::EpsilonTooLarge { .. } => "E_EPSILON_TOO_LARGE",
            Error::NoBracket(_) => "E_NO_BRACKET",
            Error::Infeasible(_) => "E_INFEASIBLE",
            Error::Unbounded { .. } => "E_UNBOUNDED",
            Error::NegativeMultiplier(_) => "E_NEGATIVE_MULTIPLIER",
            Error::KktDegeneracy { .. } => "E_KKT_DEGENERACY",
            Error::OutOfBranch { .. } => "E_OUT_OF_BRANCH",
            Error::NoRootInBranch(_) => "E_NO_ROOT_IN_BRANCH",
            Error::NegativeMu { .. } => "E_NEGATIVE_MU",
            Error::RangeError(_) => "E_RANGE",
            Error::NoFeasiblePoint => "E_NO_FEASIBLE_POINT",
            Error::GridTooCoarse(_) => "E_GRID_TOO_COARSE",
            Error::DimensionError(_) => "E_DIMENSION",
            Error::NoFlipInRange { .. } => "E_NO_FLIP",
            Error::InvalidGrid(_) => "E_INVALID_GRID",
            Error::Io(_) => "E_IO",
        }
    }

    /// True for errors caused by malformed or invalid input rather than by a
    /// solver failing on a valid problem.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::LengthMismatch { .. }
                | Error::InvalidDistribution(_)
                | Error::InvalidReduction { .. }
                | Error::IndexOrder { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Validation { .. }
                | Error::Parse(_)
                | Error::UnknownAction(_)
                | Error::EpsilonTooLarge { .. }
                | Error::DimensionError(_)
                | Error::InvalidGrid(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
