//! Finite-difference check of the compiled first and second derivatives.

use crate::nlp::{Compiled, NlpProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    /// Worst relative error of objective gradient and constraint Jacobian.
    pub first_order: f64,
    /// Worst relative error of the Lagrangian Hessian.
    pub second_order: f64,
    /// `(row or "objective", var)` of the worst first-order entry.
    pub worst_first: Option<(String, usize)>,
}

impl DerivativeReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.first_order <= tol && self.second_order <= tol
    }
}

fn rel(an: f64, fd: f64) -> f64 {
    (an - fd).abs() / an.abs().max(1.0)
}

/// Compares analytic derivatives at `x` with central differences of step
/// `1e-6 * max(1, |x_j|)`. The Hessian is checked with multipliers `lambda`
/// and objective factor 1.
pub fn check_derivatives(p: &NlpProblem, x: &[f64], lambda: &[f64]) -> DerivativeReport {
    let comp = Compiled::new(p);
    let (n, m) = (comp.n, comp.m);
    let mut grad = vec![0.0; n];
    comp.gradient(p, x, &mut grad);
    let mut jac = vec![0.0; comp.jac.len()];
    comp.jacobian(p, x, &mut jac);
    let mut dense_j = vec![vec![0.0; n]; m];
    for (k, &(i, j)) in comp.jac.iter().enumerate() {
        dense_j[i][j] += jac[k];
    }
    let mut hv = vec![0.0; comp.hess.len()];
    comp.hessian(p, x, 1.0, lambda, &mut hv);
    let mut dense_h = vec![vec![0.0; n]; n];
    for (k, &(i, j)) in comp.hess.iter().enumerate() {
        dense_h[i][j] += hv[k];
        if i != j {
            dense_h[j][i] += hv[k];
        }
    }

    let lag_grad = |pt: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        comp.gradient(p, pt, &mut g);
        let mut jv = vec![0.0; comp.jac.len()];
        comp.jacobian(p, pt, &mut jv);
        for (k, &(i, j)) in comp.jac.iter().enumerate() {
            g[j] += lambda[i] * jv[k];
        }
        g
    };

    let mut report = DerivativeReport {
        first_order: 0.0,
        second_order: 0.0,
        worst_first: None,
    };
    let mut cp = vec![0.0; m];
    let mut cm = vec![0.0; m];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fd = (comp.objective(p, &xp) - comp.objective(p, &xm)) / (2.0 * h);
        let e = rel(grad[j], fd);
        if e > report.first_order {
            report.first_order = e;
            report.worst_first = Some(("objective".to_string(), j));
        }
        comp.constraints(p, &xp, &mut cp);
        comp.constraints(p, &xm, &mut cm);
        for i in 0..m {
            let e = rel(dense_j[i][j], (cp[i] - cm[i]) / (2.0 * h));
            if e > report.first_order {
                report.first_order = e;
                report.worst_first = Some((p.constraints[i].name.clone(), j));
            }
        }
        let gp = lag_grad(&xp);
        let gm = lag_grad(&xm);
        for i in 0..n {
            let e = rel(dense_h[i][j], (gp[i] - gm[i]) / (2.0 * h));
            report.second_order = report.second_order.max(e);
        }
    }
    report
}
