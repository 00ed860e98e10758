use std::collections::HashMap;

use super::expr::{Expr, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub init: f64,
}

/// `lower <= expr(x) <= upper`; an equality when `lower == upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
    pub lower: f64,
    pub upper: f64,
    /// Kept strictly inside by a log barrier instead of a slack. Only honoured
    /// for one-sided rows that hold strictly at the starting point.
    pub interior: bool,
}

impl Constraint {
    pub fn is_equality(&self) -> bool {
        self.lower == self.upper
    }

    /// Distance of `value` outside `[lower, upper]`.
    pub fn violation(&self, value: f64) -> f64 {
        (self.lower - value).max(value - self.upper).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemMeta {
    /// Formulation name (`ac`, `socp`, ...).
    pub tag: String,
    pub load_factor: f64,
    /// Whether the feasible set and objective are convex, so that local
    /// infeasibility certificates are global.
    pub convex: bool,
}

/// A smooth nonlinear program `min f(x)` s.t. `cl <= c(x) <= cu`, `xl <= x <= xu`.
#[derive(Debug, Clone, PartialEq)]
pub struct NlpProblem {
    pub vars: Vec<VarInfo>,
    pub objective: Expr,
    pub constraints: Vec<Constraint>,
    pub meta: ProblemMeta,
}

impl NlpProblem {
    pub fn new(tag: &str, load_factor: f64, convex: bool) -> Self {
        NlpProblem {
            vars: Vec::new(),
            objective: Expr::new(),
            constraints: Vec::new(),
            meta: ProblemMeta {
                tag: tag.to_string(),
                load_factor,
                convex,
            },
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, init: f64) -> usize {
        self.vars.push(VarInfo {
            name: name.into(),
            lower,
            upper,
            init,
        });
        self.vars.len() - 1
    }

    pub fn add_eq(&mut self, name: impl Into<String>, expr: Expr, rhs: f64) {
        self.add_range(name, expr, rhs, rhs);
    }

    pub fn add_range(&mut self, name: impl Into<String>, expr: Expr, lower: f64, upper: f64) {
        self.constraints.push(Constraint {
            name: name.into(),
            expr,
            lower,
            upper,
            interior: false,
        });
    }

    /// `expr <= 0`
    pub fn add_le0(&mut self, name: impl Into<String>, expr: Expr) {
        self.add_range(name, expr, f64::NEG_INFINITY, 0.0);
    }

    /// `expr >= 0`
    pub fn add_ge0(&mut self, name: impl Into<String>, expr: Expr) {
        self.add_range(name, expr, 0.0, f64::INFINITY);
    }

    /// `expr >= 0`, preferably kept strictly positive throughout the solve.
    pub fn add_interior_ge0(&mut self, name: impl Into<String>, expr: Expr) {
        self.add_ge0(name, expr);
        if let Some(c) = self.constraints.last_mut() {
            c.interior = true;
        }
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.init).collect()
    }

    pub fn constraint_named(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        if n == 0 {
            return Err(Error::InconsistentProblem("no variables".into()));
        }
        for v in &self.vars {
            if !(v.lower <= v.upper) {
                return Err(Error::InconsistentProblem(format!(
                    "variable {} has lower bound {} > upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
        }
        for c in &self.constraints {
            if !(c.lower <= c.upper) {
                return Err(Error::InconsistentProblem(format!(
                    "constraint {} has lower bound {} > upper bound {}",
                    c.name, c.lower, c.upper
                )));
            }
            if c.expr.max_var().is_some_and(|m| m >= n) {
                return Err(Error::InconsistentProblem(format!(
                    "constraint {} references an undeclared variable",
                    c.name
                )));
            }
        }
        if self.objective.max_var().is_some_and(|m| m >= n) {
            return Err(Error::InconsistentProblem(
                "objective references an undeclared variable".into(),
            ));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Largest bound or constraint violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let cons = self
            .constraints
            .iter()
            .map(|c| c.violation(c.expr.value(x)))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        cons.max(bounds)
    }
}

/// Where each term's local derivatives land in the global sparse arrays.
#[derive(Debug, Clone)]
struct TermMap {
    /// Per role: Jacobian slot (constraint rows) or gradient index (objective).
    grad: Vec<usize>,
    /// Per local pair `(r, s)` with `r <= s`: (Hessian slot, local index, multiplicity).
    hess: Vec<(usize, usize, f64)>,
}

/// Sparse derivative structure of an [`NlpProblem`], built once per solve.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub n: usize,
    pub m: usize,
    /// Jacobian in row-major triplets: `(row, col)` per slot.
    pub jac: Vec<(usize, usize)>,
    /// Lower-triangle Hessian-of-Lagrangian pattern `(row >= col)`.
    pub hess: Vec<(usize, usize)>,
    obj_terms: Vec<TermMap>,
    con_terms: Vec<Vec<TermMap>>,
}

impl Compiled {
    pub fn new(p: &NlpProblem) -> Self {
        let n = p.vars.len();
        let m = p.constraints.len();
        let mut hess = Vec::new();
        let mut hess_slot: HashMap<(usize, usize), usize> = HashMap::new();
        let mut hmap = |t: &Term, hess: &mut Vec<(usize, usize)>| -> Vec<(usize, usize, f64)> {
            if t.is_linear() {
                return Vec::new();
            }
            let roles = t.roles();
            let k = roles.len();
            let mut out = Vec::new();
            for r in 0..k {
                for s in r..k {
                    let (i, j) = (roles[r].max(roles[s]), roles[r].min(roles[s]));
                    let slot = *hess_slot.entry((i, j)).or_insert_with(|| {
                        hess.push((i, j));
                        hess.len() - 1
                    });
                    let mult = if r != s && i == j { 2.0 } else { 1.0 };
                    out.push((slot, r * k + s, mult));
                }
            }
            out
        };

        let obj_terms = p
            .objective
            .terms
            .iter()
            .map(|t| TermMap {
                grad: t.roles(),
                hess: hmap(t, &mut hess),
            })
            .collect();

        let mut jac = Vec::new();
        let mut con_terms = Vec::with_capacity(m);
        for (row, c) in p.constraints.iter().enumerate() {
            let mut cols: Vec<usize> = c.expr.terms.iter().flat_map(|t| t.roles()).collect();
            cols.sort_unstable();
            cols.dedup();
            let base = jac.len();
            jac.extend(cols.iter().map(|&col| (row, col)));
            let maps = c
                .expr
                .terms
                .iter()
                .map(|t| TermMap {
                    grad: t
                        .roles()
                        .iter()
                        .map(|v| base + cols.binary_search(v).expect("column present"))
                        .collect(),
                    hess: hmap(t, &mut hess),
                })
                .collect();
            con_terms.push(maps);
        }
        Compiled {
            n,
            m,
            jac,
            hess,
            obj_terms,
            con_terms,
        }
    }

    pub fn objective(&self, p: &NlpProblem, x: &[f64]) -> f64 {
        p.objective.value(x)
    }

    pub fn gradient(&self, p: &NlpProblem, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; 8];
        for (t, map) in p.objective.terms.iter().zip(&self.obj_terms) {
            buf.resize(map.grad.len().max(buf.len()), 0.0);
            t.gradient(x, &mut buf[..map.grad.len()]);
            for (r, &v) in map.grad.iter().enumerate() {
                out[v] += buf[r];
            }
        }
    }

    pub fn constraints(&self, p: &NlpProblem, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&p.constraints) {
            *o = c.expr.value(x);
        }
    }

    pub fn jacobian(&self, p: &NlpProblem, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; 8];
        for (c, maps) in p.constraints.iter().zip(&self.con_terms) {
            for (t, map) in c.expr.terms.iter().zip(maps) {
                buf.resize(map.grad.len().max(buf.len()), 0.0);
                t.gradient(x, &mut buf[..map.grad.len()]);
                for (r, &slot) in map.grad.iter().enumerate() {
                    out[slot] += buf[r];
                }
            }
        }
    }

    /// Lower triangle of `obj_factor ∇²f + Σ λ_i ∇²c_i`.
    pub fn hessian(&self, p: &NlpProblem, x: &[f64], obj_factor: f64, lambda: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; 64];
        let mut scatter = |t: &Term, map: &TermMap, w: f64, out: &mut [f64]| {
            if map.hess.is_empty() || w == 0.0 {
                return;
            }
            let k = map.grad.len();
            buf.resize((k * k).max(buf.len()), 0.0);
            t.hessian(x, &mut buf[..k * k]);
            for &(slot, local, mult) in &map.hess {
                out[slot] += w * mult * buf[local];
            }
        };
        for (t, map) in p.objective.terms.iter().zip(&self.obj_terms) {
            scatter(t, map, obj_factor, out);
        }
        for ((c, maps), &l) in p.constraints.iter().zip(&self.con_terms).zip(lambda) {
            for (t, map) in c.expr.terms.iter().zip(maps) {
                scatter(t, map, l, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::expr::TrigKind;

    fn sample() -> NlpProblem {
        let mut p = NlpProblem::new("test", 1.0, false);
        let a = p.add_var("a", 0.5, 1.5, 1.0);
        let b = p.add_var("b", 0.5, 1.5, 1.0);
        let c = p.add_var("c", -1.0, 1.0, 0.1);
        let d = p.add_var("d", -1.0, 1.0, -0.2);
        p.objective = Expr::new().square(2.0, a).linear(c, 3.0).product(0.5, a, d);
        p.add_eq(
            "flow",
            Expr::new()
                .square(1.1, a)
                .trig(-0.8, [a, b], [c, d], 0.05, TrigKind::Cos)
                .trig(0.3, [a, a], [d, c], 0.0, TrigKind::Sin)
                .linear(b, 1.0),
            0.2,
        );
        p.add_le0("cone", Expr::new().square(1.0, c).square(1.0, d).product(-1.0, a, b));
        p
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let p = sample();
        let comp = Compiled::new(&p);
        let x = [1.05, 0.93, 0.17, -0.31];
        let lambda = [0.7, -1.3];
        let sigma = 0.9;
        let mut h = vec![0.0; comp.hess.len()];
        comp.hessian(&p, &x, sigma, &lambda, &mut h);

        let lag_grad = |x: &[f64]| {
            let mut g = vec![0.0; 4];
            comp.gradient(&p, x, &mut g);
            g.iter_mut().for_each(|v| *v *= sigma);
            let mut j = vec![0.0; comp.jac.len()];
            comp.jacobian(&p, x, &mut j);
            for (k, &(r, col)) in comp.jac.iter().enumerate() {
                g[col] += lambda[r] * j[k];
            }
            g
        };
        let mut dense = [[0.0; 4]; 4];
        for (k, &(i, j)) in comp.hess.iter().enumerate() {
            dense[i][j] += h[k];
            if i != j {
                dense[j][i] += h[k];
            }
        }
        let step = 1e-6;
        for j in 0..4 {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let (gp, gm) = (lag_grad(&xp), lag_grad(&xm));
            for i in 0..4 {
                let fd = (gp[i] - gm[i]) / (2.0 * step);
                assert!((fd - dense[i][j]).abs() < 1e-6, "H[{i}][{j}] {fd} vs {}", dense[i][j]);
            }
        }
    }

    #[test]
    fn validation() {
        let mut p = sample();
        assert!(p.validate().is_ok());
        p.vars[0].lower = 2.0;
        assert!(p.validate().is_err());
        let mut p = sample();
        p.add_eq("bad", Expr::var(17), 0.0);
        assert!(p.validate().is_err());
        assert!(NlpProblem::new("empty", 1.0, true).validate().is_err());
    }
}
