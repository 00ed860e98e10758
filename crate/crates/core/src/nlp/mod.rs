//! Solver-agnostic smooth nonlinear programs.

pub mod expr;
pub mod problem;

pub use expr::{Expr, Term, TrigKind};
pub use problem::{Compiled, Constraint, NlpProblem, ProblemMeta, VarInfo};
