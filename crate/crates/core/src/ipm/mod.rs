//! Interior-point solver for [`NlpProblem`](crate::nlp::NlpProblem).

mod derivcheck;
mod options;
mod solver;
pub mod sparse;

pub use derivcheck::{check_derivatives, DerivativeReport};
pub use options::{IterLog, SolveOutcome, SolveStatus, SolverOptions};
pub use solver::{solve, solve_logged};
