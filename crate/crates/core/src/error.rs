use thiserror::Error;

/// Errors raised by grid construction, the solvers and the checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} samples, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("profile contains a non-finite value at node {0}")]
    NonFinite(usize),

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("cannot project a profile with zero flux onto the flux sphere")]
    DegenerateProjection,

    #[error("Lagrange multiplier undefined: {0}")]
    UndefinedMultiplier(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("mountain-pass path degenerated: {0}")]
    PathDegeneration(String),

    #[error("singular linear system (zero pivot in column {0})")]
    SingularSystem(usize),

    #[error("decay fit undefined: {0}")]
    FitUndefined(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
