use thiserror::Error;

/// Errors raised while building, reading or validating inputs.
///
/// Solver non-convergence is never an error; it is reported through
/// [`crate::ipm::SolveStatus`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("degenerate impedance on branch {0} (r = x = 0)")]
    DegenerateImpedance(usize),

    #[error("invalid generator {id}: {reason}")]
    InvalidGenerator { id: usize, reason: String },

    #[error("bus {0} has no voltage setpoint")]
    MissingSetpoint(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("parse error: {0}")]
    MissingSection(String),

    #[error("dangling reference: {what} refers to bus {bus}, which does not exist")]
    DanglingBus { what: String, bus: usize },

    #[error("duplicate {what} id {id}")]
    DuplicateId { what: String, id: usize },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("formulation error: {0}")]
    Formulation(String),

    #[error("inconsistent problem: {0}")]
    InconsistentProblem(String),

    #[error("undefined gap: AC cost {0} is not positive")]
    UndefinedGap(f64),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("plot error: {0}")]
    Plot(String),

    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
