use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Scaled KKT error at which a point is declared optimal.
    pub kkt_tolerance: f64,
    /// When the limit is hit at an infeasible point a final restoration
    /// phase (at least 50 iterations) may still run to classify it.
    pub max_iterations: usize,
    pub initial_barrier: f64,
    /// Linear factor of the monotone barrier decrease, in (0, 1).
    pub barrier_reduction: f64,
    /// Wall-clock budget in seconds (`f64::INFINITY` for none).
    pub time_limit: f64,
    /// Smallest Hessian shift tried when inertia correction is needed.
    pub regularization_floor: f64,
    /// Enter feasibility restoration when progress stalls; disabled inside
    /// the restoration solve itself.
    pub restoration: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kkt_tolerance: 1e-8,
            max_iterations: 500,
            initial_barrier: 0.1,
            barrier_reduction: 0.2,
            time_limit: f64::INFINITY,
            regularization_floor: 1e-20,
            restoration: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.kkt_tolerance > 0.0) {
            return Err(format!("kkt_tolerance must be positive, got {}", self.kkt_tolerance));
        }
        if !(self.barrier_reduction > 0.0 && self.barrier_reduction < 1.0) {
            return Err(format!(
                "barrier_reduction must lie in (0, 1), got {}",
                self.barrier_reduction
            ));
        }
        if !(self.initial_barrier > 0.0) {
            return Err(format!("initial_barrier must be positive, got {}", self.initial_barrier));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolveStatus {
    Optimal,
    LocallyInfeasible,
    IterationLimit,
    TimeLimit,
    NumericFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::LocallyInfeasible => "locally_infeasible",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NumericFailure => "numeric_failure",
        }
    }

    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => SolveStatus::Optimal,
            "locally_infeasible" | "infeasible" => SolveStatus::LocallyInfeasible,
            "iteration_limit" => SolveStatus::IterationLimit,
            "time_limit" => SolveStatus::TimeLimit,
            "numeric_failure" => SolveStatus::NumericFailure,
            _ => return Err(format!("unknown status '{s}'")),
        })
    }
}

/// Result of one solve. `objective` is evaluated at the returned point
/// whatever the status.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Constraint multipliers, sign convention `∇f + Jᵀy - z_L + z_U = 0`.
    pub constraint_multipliers: Vec<f64>,
    pub bound_multipliers_lower: Vec<f64>,
    pub bound_multipliers_upper: Vec<f64>,
    pub iterations: usize,
    pub wall_time: f64,
    /// Scaled KKT error at the returned point.
    pub kkt_error: f64,
    /// Largest constraint or bound violation at the returned point.
    pub max_violation: f64,
    /// Lagrangian value at the returned primal-dual point.
    pub dual_objective: f64,
    /// Whether the problem was flagged convex (infeasibility is then proved).
    pub convex: bool,
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterLog {
    pub iteration: usize,
    pub objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub barrier: f64,
    pub step: f64,
    /// True while the feasibility-restoration subproblem is running.
    pub restoration: bool,
}

impl fmt::Display for IterLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:4}{} {:+.8e} {:.2e} {:.2e} {:.2e} {:.2e}",
            self.iteration,
            if self.restoration { "r" } else { " " },
            self.objective,
            self.primal_infeasibility,
            self.dual_infeasibility,
            self.barrier,
            self.step
        )
    }
}
