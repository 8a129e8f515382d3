use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    DidNotConverge { sweeps: usize, off_norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square or has non-finite entries: {0}")]
    MalformedMatrix(String),
    #[error("projector is invalid: {0}")]
    InvalidProjector(String),
    #[error("incompatible (non-commuting) operators: {0}")]
    Incompatible(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error for `{label}`: {reason}")]
    Validation { label: String, reason: String },
    #[error("density operator has negative eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("density operator has trace {trace} (expected 1)")]
    BadTrace { trace: f64 },

    #[error("marginalization onto an empty set of observables")]
    EmptySubset,
    #[error("observable {0} is not a member of the context")]
    NotSubset(usize),
    #[error("overlapping contexts disagree on shared marginals (max discrepancy {max_discrepancy:.3e})")]
    IncompatibleMarginals { max_discrepancy: f64 },

    #[error("empirical model failed its compatibility check")]
    ModelIncoherent,
    #[error("linear solver failed: {0}")]
    NumericalFailure(String),
    #[error("constraint system is infeasible")]
    InfeasibleSystem,
    #[error("model is globally noncontextual; no infeasibility witness exists")]
    NotInfeasible,
    #[error("unknown cell: {0}")]
    UnknownCell(String),

    #[error("sampling distribution sums to {total} (expected 1)")]
    DegenerateDistribution { total: f64 },
    #[error("conditional distribution undefined: Tr(rho P_{index}) = {weight:.3e}")]
    ZeroConditional { index: usize, weight: f64 },
    #[error("calibration failed on run {run}: pointer {pointer}, expected {expected}")]
    CalibrationFailure {
        run: usize,
        pointer: usize,
        expected: usize,
    },
    #[error("no records supplied")]
    EmptyInput,
    #[error("records mix handle settings")]
    MixedHandles,
}
