//! Primal-dual interior-point method for smooth sparse NLPs.
//!
//! Inequalities `cl <= c(x) <= cu` get slack variables, which are then
//! eliminated from the Newton system, so each iteration factors
//!
//! ```text
//! [ W + Σx + δw I    Jᵀ ]
//! [ J               -D  ]
//! ```
//!
//! with `D = δc` on equality rows and `1/(Σs + δw) + δc` on inequality
//! rows. `δw` is raised until the inertia is `(n, m, 0)`. Steps are
//! globalized by a backtracking Armijo search on the ℓ1 merit function of
//! the barrier problem, with one second-order correction per iteration.
//! When progress stalls the solver minimizes the ℓ1 constraint violation
//! instead; a strictly positive minimum means the problem is (locally)
//! infeasible.

use std::time::Instant;

use super::options::{IterLog, SolveOutcome, SolveStatus, SolverOptions};
use super::sparse::{sym_matvec, FactorError, Ldl};
use crate::error::{Error, Result};
use crate::nlp::{Compiled, Expr, NlpProblem};

const NONE: usize = usize::MAX;
const BOUND_PUSH: f64 = 1e-2;
const BOUND_RELAX: f64 = 1e-8;
const KAPPA_SIGMA: f64 = 1e10;
const KAPPA_EPS: f64 = 10.0;
const BARRIER_POWER: f64 = 1.5;
const TAU_MIN: f64 = 0.995;
const S_MAX: f64 = 100.0;
const ARMIJO: f64 = 1e-4;
const MAX_GRADIENT: f64 = 100.0;
const ALPHA_MIN: f64 = 1e-12;
const MAX_RESTORATIONS: usize = 3;
const STALL_WINDOW: usize = 30;
const ACCEPTABLE_TOL: f64 = 1e-3;
const ACCEPTABLE_VIOL: f64 = 1e-6;
const ACCEPTABLE_ITERS: usize = 15;

/// Solves `problem` from the initial values stored in its variables.
pub fn solve(problem: &NlpProblem, options: &SolverOptions) -> Result<SolveOutcome> {
    solve_logged(problem, options, &mut |_| {})
}

/// As [`solve`], streaming one [`IterLog`] per iteration to `sink`.
pub fn solve_logged(
    problem: &NlpProblem,
    options: &SolverOptions,
    sink: &mut dyn FnMut(&IterLog),
) -> Result<SolveOutcome> {
    problem.validate()?;
    options.validate().map_err(Error::InconsistentProblem)?;
    let start = Instant::now();
    let ipm = Ipm::new(problem, options.clone());
    let mut out = ipm.run(sink, start, 0, false);
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

struct Evals {
    f: f64,
    grad: Vec<f64>,
    c: Vec<f64>,
    jac: Vec<f64>,
}

struct Step {
    dz: Vec<f64>,
    dy: Vec<f64>,
    dzl: Vec<f64>,
    dzu: Vec<f64>,
}

struct BarrierRow {
    row: usize,
    /// Jacobian slots of the row whose column is free, with the column's
    /// position among the free variables.
    slots: Vec<(usize, usize)>,
    /// KKT entry of each slot pair `(a, b)` with `b <= a`, row-major.
    pairs: Vec<usize>,
}

enum Restoration {
    Restored,
    Infeasible,
    Failed(SolveStatus),
}

struct Ipm<'a> {
    p: &'a NlpProblem,
    comp: Compiled,
    opts: SolverOptions,
    n: usize,
    m: usize,
    nf: usize,
    free: Vec<usize>,
    ineq: Vec<usize>,
    ineq_of: Vec<usize>,
    /// Rows handled by a log barrier on `c(x)` itself.
    barrier: Vec<BarrierRow>,
    is_barrier: Vec<bool>,
    obj_scale: f64,
    con_scale: Vec<f64>,
    /// Scaled right-hand side of equality rows.
    rhs: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x_template: Vec<f64>,
    kkt: Vec<(usize, usize)>,
    hess_pos: Vec<usize>,
    jac_pos: Vec<usize>,
    ldl: Ldl,
    last_dw: f64,
    mu: f64,
    // iterate
    z: Vec<f64>,
    y: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

fn push_inside(v: f64, l: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (l, u);
    if finite(l) && finite(u) {
        let push = (BOUND_PUSH * l.abs().max(1.0)).min(BOUND_PUSH * (u - l));
        lo = l + push;
        let push = (BOUND_PUSH * u.abs().max(1.0)).min(BOUND_PUSH * (u - l));
        hi = u - push;
    } else if finite(l) {
        lo = l + BOUND_PUSH * l.abs().max(1.0);
    } else if finite(u) {
        hi = u - BOUND_PUSH * u.abs().max(1.0);
    }
    if lo > hi {
        return 0.5 * (l + u);
    }
    v.clamp(lo, hi)
}

fn relax_lower(l: f64) -> f64 {
    if finite(l) {
        l - BOUND_RELAX * l.abs().max(1.0)
    } else {
        l
    }
}

fn relax_upper(u: f64) -> f64 {
    if finite(u) {
        u + BOUND_RELAX * u.abs().max(1.0)
    } else {
        u
    }
}

/// Initial values pushed into the bounds.
fn start_point(p: &NlpProblem, free: &[usize], template: &[f64]) -> Vec<f64> {
    let mut x = template.to_vec();
    for &j in free {
        let v = &p.vars[j];
        x[j] = push_inside(v.init, v.lower, v.upper);
    }
    x
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

impl<'a> Ipm<'a> {
    fn new(p: &'a NlpProblem, opts: SolverOptions) -> Self {
        let comp = Compiled::new(p);
        let n = comp.n;
        let m = comp.m;
        let mut free = Vec::new();
        let mut pos = vec![NONE; n];
        let mut x_template = vec![0.0; n];
        for (j, v) in p.vars.iter().enumerate() {
            if v.lower.is_finite() && v.upper - v.lower <= 1e-14 * v.lower.abs().max(1.0) {
                x_template[j] = 0.5 * (v.lower + v.upper);
            } else {
                pos[j] = free.len();
                free.push(j);
                x_template[j] = v.init;
            }
        }
        let nf = free.len();
        let x0 = start_point(p, &free, &x_template);
        let mut is_barrier = vec![false; m];
        let mut ineq = Vec::new();
        let mut ineq_of = vec![NONE; m];
        for (i, c) in p.constraints.iter().enumerate() {
            if c.interior && c.lower == 0.0 && c.upper == f64::INFINITY && c.expr.value(&x0) > 0.0 {
                is_barrier[i] = true;
            } else if !c.is_equality() {
                ineq_of[i] = ineq.len();
                ineq.push(i);
            }
        }

        // KKT pattern over [free vars; rows]
        let mut kkt = Vec::new();
        let hess_pos = comp
            .hess
            .iter()
            .map(|&(i, j)| {
                if pos[i] == NONE || pos[j] == NONE {
                    NONE
                } else {
                    kkt.push((pos[i].max(pos[j]), pos[i].min(pos[j])));
                    kkt.len() - 1
                }
            })
            .collect();
        let jac_pos = comp
            .jac
            .iter()
            .map(|&(row, col)| {
                if pos[col] == NONE || is_barrier[row] {
                    NONE
                } else {
                    kkt.push((nf + row, pos[col]));
                    kkt.len() - 1
                }
            })
            .collect();
        let mut barrier = Vec::new();
        for row in (0..m).filter(|&i| is_barrier[i]) {
            let slots: Vec<(usize, usize)> = comp
                .jac
                .iter()
                .enumerate()
                .filter(|(_, &(r, c))| r == row && pos[c] != NONE)
                .map(|(slot, &(_, c))| (slot, pos[c]))
                .collect();
            let mut pairs = Vec::new();
            for a in 0..slots.len() {
                for b in 0..=a {
                    let (pa, pb) = (slots[a].1, slots[b].1);
                    kkt.push((pa.max(pb), pa.min(pb)));
                    pairs.push(kkt.len() - 1);
                }
            }
            barrier.push(BarrierRow { row, slots, pairs });
        }
        let ldl = Ldl::new(nf + m, &kkt);

        let opts_mu = opts.initial_barrier;
        let mut ipm = Ipm {
            p,
            comp,
            opts,
            n,
            m,
            nf,
            free,
            ineq,
            ineq_of,
            barrier,
            is_barrier,
            obj_scale: 1.0,
            con_scale: vec![1.0; m],
            rhs: vec![0.0; m],
            lb: Vec::new(),
            ub: Vec::new(),
            x_template,
            kkt,
            hess_pos,
            jac_pos,
            ldl,
            last_dw: 0.0,
            mu: opts_mu,
            z: Vec::new(),
            y: vec![0.0; m],
            zl: Vec::new(),
            zu: Vec::new(),
        };
        ipm.initialize();
        ipm
    }

    fn initialize(&mut self) {
        let p = self.p;
        let x = start_point(p, &self.free, &self.x_template);
        // gradient-based scaling at the start point
        let mut grad = vec![0.0; self.n];
        self.comp.gradient(p, &x, &mut grad);
        let gmax = self.free.iter().fold(0.0f64, |a, &j| a.max(grad[j].abs()));
        self.obj_scale = if gmax > MAX_GRADIENT {
            MAX_GRADIENT / gmax
        } else {
            1.0
        };
        let mut jac = vec![0.0; self.comp.jac.len()];
        self.comp.jacobian(p, &x, &mut jac);
        let mut rowmax = vec![0.0f64; self.m];
        for (k, &(row, _)) in self.comp.jac.iter().enumerate() {
            if self.jac_pos[k] != NONE {
                rowmax[row] = rowmax[row].max(jac[k].abs());
            }
        }
        for i in 0..self.m {
            self.con_scale[i] = if rowmax[i] > MAX_GRADIENT {
                MAX_GRADIENT / rowmax[i]
            } else {
                1.0
            };
            self.rhs[i] = self.con_scale[i] * p.constraints[i].lower;
        }

        self.lb.clear();
        self.ub.clear();
        for &j in &self.free {
            self.lb.push(relax_lower(p.vars[j].lower));
            self.ub.push(relax_upper(p.vars[j].upper));
        }
        for &i in &self.ineq {
            let (a, b) = (p.constraints[i].lower, p.constraints[i].upper);
            let s = self.con_scale[i];
            self.lb.push(relax_lower(a * s));
            self.ub.push(relax_upper(b * s));
        }
        let mut c = vec![0.0; self.m];
        self.comp.constraints(p, &x, &mut c);
        self.z = self.free.iter().map(|&j| x[j]).collect();
        for (k, &i) in self.ineq.iter().enumerate() {
            let idx = self.nf + k;
            self.z
                .push(push_inside(c[i] * self.con_scale[i], self.lb[idx], self.ub[idx]));
        }
        let nz = self.z.len();
        self.zl = (0..nz).map(|k| if finite(self.lb[k]) { 1.0 } else { 0.0 }).collect();
        self.zu = (0..nz).map(|k| if finite(self.ub[k]) { 1.0 } else { 0.0 }).collect();
        self.y = vec![0.0; self.m];
        self.least_squares_multipliers();
    }

    fn x_full(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.x_template.clone();
        for (k, &j) in self.free.iter().enumerate() {
            x[j] = z[k];
        }
        x
    }

    fn eval(&self, z: &[f64]) -> Option<Evals> {
        let x = self.x_full(z);
        let f = self.obj_scale * self.comp.objective(self.p, &x);
        let mut grad = vec![0.0; self.n];
        self.comp.gradient(self.p, &x, &mut grad);
        grad.iter_mut().for_each(|g| *g *= self.obj_scale);
        let mut c = vec![0.0; self.m];
        self.comp.constraints(self.p, &x, &mut c);
        for (ci, s) in c.iter_mut().zip(&self.con_scale) {
            *ci *= s;
        }
        let mut jac = vec![0.0; self.comp.jac.len()];
        self.comp.jacobian(self.p, &x, &mut jac);
        for (k, &(row, _)) in self.comp.jac.iter().enumerate() {
            jac[k] *= self.con_scale[row];
        }
        let ok = f.is_finite()
            && self.barrier.iter().all(|b| c[b.row] > 0.0)
            && c.iter().all(|v| v.is_finite())
            && grad.iter().all(|v| v.is_finite())
            && jac.iter().all(|v| v.is_finite());
        ok.then_some(Evals { f, grad, c, jac })
    }

    /// Constraint residual `h(z)` in scaled units.
    fn residual(&self, ev: &Evals, z: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let k = self.ineq_of[i];
                if self.is_barrier[i] {
                    0.0
                } else if k == NONE {
                    ev.c[i] - self.rhs[i]
                } else {
                    ev.c[i] - z[self.nf + k]
                }
            })
            .collect()
    }

    /// `∇f + Jᵀy` over z (slack columns carry `-y`).
    fn lagrangian_gradient(&self, ev: &Evals, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.z.len()];
        for (k, &j) in self.free.iter().enumerate() {
            g[k] = ev.grad[j];
        }
        let mut col_pos = vec![NONE; self.n];
        for (k, &j) in self.free.iter().enumerate() {
            col_pos[j] = k;
        }
        for (slot, &(row, col)) in self.comp.jac.iter().enumerate() {
            if col_pos[col] != NONE {
                g[col_pos[col]] += ev.jac[slot] * y[row];
            }
        }
        for (k, &i) in self.ineq.iter().enumerate() {
            g[self.nf + k] -= y[i];
        }
        g
    }

    fn slacks(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let sl = z
            .iter()
            .zip(&self.lb)
            .map(|(&v, &l)| if finite(l) { (v - l).max(1e-300) } else { f64::INFINITY })
            .collect();
        let su = z
            .iter()
            .zip(&self.ub)
            .map(|(&v, &u)| if finite(u) { (u - v).max(1e-300) } else { f64::INFINITY })
            .collect();
        (sl, su)
    }

    /// `(E_0-scaled error, E_mu error, primal inf, dual inf)`.
    fn errors(&self, ev: &Evals, mu: f64) -> (f64, f64, f64, f64) {
        let h = self.residual(ev, &self.z);
        let g = self.lagrangian_gradient(ev, &self.y);
        let (sl, su) = self.slacks(&self.z);
        let dual: Vec<f64> = (0..g.len()).map(|k| g[k] - self.zl[k] + self.zu[k]).collect();
        let inf_du = inf_norm(&dual);
        let inf_pr = inf_norm(&h);
        let mut comp0: f64 = 0.0;
        let mut comp_mu: f64 = 0.0;
        let mut zsum = 0.0;
        let mut nb = 0usize;
        for k in 0..self.z.len() {
            if sl[k].is_finite() {
                comp0 = comp0.max((sl[k] * self.zl[k]).abs());
                comp_mu = comp_mu.max((sl[k] * self.zl[k] - mu).abs());
                zsum += self.zl[k].abs();
                nb += 1;
            }
            if su[k].is_finite() {
                comp0 = comp0.max((su[k] * self.zu[k]).abs());
                comp_mu = comp_mu.max((su[k] * self.zu[k] - mu).abs());
                zsum += self.zu[k].abs();
                nb += 1;
            }
        }
        for b in &self.barrier {
            let lc = -self.y[b.row] * ev.c[b.row];
            comp0 = comp0.max(lc.abs());
            comp_mu = comp_mu.max((lc - mu).abs());
        }
        let ysum: f64 = self.y.iter().map(|v| v.abs()).sum();
        let sd = (S_MAX.max((ysum + zsum) / ((self.m + nb).max(1)) as f64)) / S_MAX;
        let sc = (S_MAX.max(zsum / nb.max(1) as f64)) / S_MAX;
        let e0 = (inf_du / sd).max(inf_pr).max(comp0 / sc);
        let emu = (inf_du / sd).max(inf_pr).max(comp_mu / sc);
        (e0, emu, inf_pr, inf_du)
    }

    fn barrier_merit(&self, ev: &Evals, z: &[f64], mu: f64, nu: f64) -> f64 {
        let (sl, su) = self.slacks(z);
        let mut phi = ev.f;
        for k in 0..z.len() {
            if sl[k].is_finite() {
                phi -= mu * sl[k].ln();
            }
            if su[k].is_finite() {
                phi -= mu * su[k].ln();
            }
        }
        for b in &self.barrier {
            phi -= mu * ev.c[b.row].ln();
        }
        let h = self.residual(ev, z);
        phi + nu * h.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn barrier_gradient(&self, ev: &Evals, z: &[f64], mu: f64) -> Vec<f64> {
        let (sl, su) = self.slacks(z);
        let mut g = vec![0.0; z.len()];
        for (k, &j) in self.free.iter().enumerate() {
            g[k] = ev.grad[j];
        }
        for k in 0..z.len() {
            if sl[k].is_finite() {
                g[k] -= mu / sl[k];
            }
            if su[k].is_finite() {
                g[k] += mu / su[k];
            }
        }
        for b in &self.barrier {
            let w = mu / ev.c[b.row];
            for &(slot, k) in &b.slots {
                g[k] -= w * ev.jac[slot];
            }
        }
        g
    }

    /// Fraction-to-the-boundary rule for barrier rows.
    fn keeps_interior(&self, from: &Evals, to: &Evals, tau: f64) -> bool {
        self.barrier
            .iter()
            .all(|b| to.c[b.row] >= (1.0 - tau) * from.c[b.row])
    }

    /// Keeps barrier-row multipliers `λ = -y` within a factor of `mu / c(x)`.
    fn safeguard_barrier_duals(&mut self, ev: &Evals, mu: f64) {
        for b in &self.barrier {
            let c = ev.c[b.row];
            let lam = (-self.y[b.row]).min(KAPPA_SIGMA * mu / c).max(mu / (KAPPA_SIGMA * c));
            self.y[b.row] = -lam;
        }
    }

    fn sigma(&self) -> Vec<f64> {
        let (sl, su) = self.slacks(&self.z);
        (0..self.z.len())
            .map(|k| {
                let mut s = 0.0;
                if sl[k].is_finite() {
                    s += self.zl[k] / sl[k];
                }
                if su[k].is_finite() {
                    s += self.zu[k] / su[k];
                }
                s
            })
            .collect()
    }

    fn kkt_values(&self, ev: &Evals, with_hessian: bool) -> Vec<f64> {
        let mut vals = vec![0.0; self.kkt.len()];
        if with_hessian {
            let x = self.x_full(&self.z);
            let lambda: Vec<f64> = self.y.iter().zip(&self.con_scale).map(|(a, b)| a * b).collect();
            let mut hv = vec![0.0; self.comp.hess.len()];
            self.comp.hessian(self.p, &x, self.obj_scale, &lambda, &mut hv);
            for (slot, &e) in self.hess_pos.iter().enumerate() {
                if e != NONE {
                    vals[e] += hv[slot];
                }
            }
        }
        for (slot, &e) in self.jac_pos.iter().enumerate() {
            if e != NONE {
                vals[e] += ev.jac[slot];
            }
        }
        if with_hessian {
            for b in &self.barrier {
                let w = -self.y[b.row] / ev.c[b.row];
                let mut e = 0;
                for a in 0..b.slots.len() {
                    for q in 0..=a {
                        vals[b.pairs[e]] += w * ev.jac[b.slots[a].0] * ev.jac[b.slots[q].0];
                        e += 1;
                    }
                }
            }
        }
        vals
    }

    fn diag_shift(&self, sigma: &[f64], dw: f64, dc: f64) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.nf + self.m);
        d.extend(sigma[..self.nf].iter().map(|s| s + dw));
        for i in 0..self.m {
            let k = self.ineq_of[i];
            d.push(if self.is_barrier[i] {
                -1.0
            } else if k == NONE {
                -dc
            } else {
                -(1.0 / (sigma[self.nf + k] + dw) - 0.0) - dc
            });
        }
        d
    }

    /// Factors the KKT matrix with inertia correction. Returns the diagonal
    /// shift used, or `None` when no regularization fixes it.
    fn factor(&mut self, vals: &[f64], sigma: &[f64], mu: f64) -> Option<(Vec<f64>, f64)> {
        let mut dw: f64 = 0.0;
        let mut dc: f64 = 0.0;
        for _ in 0..80 {
            let shift = self.diag_shift(sigma, dw, dc);
            let r = self.ldl.factor(vals, &shift);
            match r {
                Ok(inertia) if inertia.positive == self.nf && inertia.negative == self.m => {
                    if dw > 0.0 {
                        self.last_dw = dw;
                    }
                    return Some((shift, dw));
                }
                Ok(_) => {}
                Err(FactorError::ZeroPivot(_)) => {
                    if dc == 0.0 {
                        dc = 1e-8 * mu.powf(0.25);
                        continue;
                    }
                }
                Err(FactorError::NotFinite) => return None,
            }
            dw = if dw == 0.0 {
                if self.last_dw == 0.0 {
                    1e-4
                } else {
                    (self.last_dw / 3.0).max(self.opts.regularization_floor)
                }
            } else if self.last_dw == 0.0 {
                dw * 100.0
            } else {
                dw * 8.0
            };
            if dw > 1e40 {
                return None;
            }
        }
        None
    }

    /// Solves the reduced system for `[dx; dy]` given full right-hand sides
    /// `(r_z, r_c)` where `r_z` covers free vars and slacks.
    fn solve_reduced(&self, vals: &[f64], sigma: &[f64], dw: f64, rz: &[f64], rc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nf = self.nf;
        let mut b = vec![0.0; nf + self.m];
        b[..nf].copy_from_slice(&rz[..nf]);
        for i in 0..self.m {
            let k = self.ineq_of[i];
            b[nf + i] = if k == NONE {
                rc[i]
            } else {
                rc[i] + rz[nf + k] / (sigma[nf + k] + dw)
            };
        }
        let mut sol = b.clone();
        self.ldl.solve(&mut sol);
        // iterative refinement against the system without constraint regularization
        let target = self.diag_shift(sigma, dw, 0.0);
        let mut r = vec![0.0; b.len()];
        let mut last = f64::INFINITY;
        let mut best = sol.clone();
        for _ in 0..10 {
            sym_matvec(&self.kkt, vals, &target, &sol, &mut r);
            let mut worst: f64 = 0.0;
            for k in 0..r.len() {
                r[k] = b[k] - r[k];
                worst = worst.max(r[k].abs());
            }
            if worst >= last {
                break;
            }
            best.copy_from_slice(&sol);
            last = worst;
            if worst <= 1e-14 * (1.0 + inf_norm(&b)) {
                break;
            }
            self.ldl.solve(&mut r);
            for k in 0..r.len() {
                sol[k] += r[k];
            }
        }
        let sol = best;
        let mut dz = vec![0.0; self.z.len()];
        dz[..nf].copy_from_slice(&sol[..nf]);
        let dy = sol[nf..].to_vec();
        for (k, &i) in self.ineq.iter().enumerate() {
            dz[nf + k] = (rz[nf + k] + dy[i]) / (sigma[nf + k] + dw);
        }
        (dz, dy)
    }

    fn least_squares_multipliers(&mut self) {
        let Some(ev) = self.eval(&self.z) else { return };
        if self.m == 0 {
            return;
        }
        let vals = self.kkt_values(&ev, false);
        let ones = vec![1.0; self.z.len()];
        let shift = self.diag_shift(&ones, 0.0, 1e-8);
        if self.ldl.factor(&vals, &shift).is_err() {
            return;
        }
        let mut y0 = vec![0.0; self.m];
        for b in &self.barrier {
            y0[b.row] = -self.mu / ev.c[b.row];
        }
        let g = self.lagrangian_gradient(&ev, &y0);
        let rz: Vec<f64> = (0..g.len()).map(|k| -(g[k] - self.zl[k] + self.zu[k])).collect();
        let rc = vec![0.0; self.m];
        let (_, mut y) = self.solve_reduced(&vals, &ones, 0.0, &rz, &rc);
        if inf_norm(&y) <= 1e3 {
            for b in &self.barrier {
                y[b.row] = y0[b.row];
            }
            self.y = y;
        } else {
            self.y = y0;
        }
    }

    fn newton_step(&mut self, ev: &Evals, mu: f64) -> Option<(Step, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        let vals = self.kkt_values(ev, true);
        let sigma = self.sigma();
        let (shift, dw) = self.factor(&vals, &sigma, mu)?;
        let g = self.lagrangian_gradient(ev, &self.y);
        let (sl, su) = self.slacks(&self.z);
        let mut rz = vec![0.0; g.len()];
        for k in 0..g.len() {
            let mut r = g[k];
            if sl[k].is_finite() {
                r -= mu / sl[k];
            }
            if su[k].is_finite() {
                r += mu / su[k];
            }
            rz[k] = -r;
        }
        for b in &self.barrier {
            let c = ev.c[b.row];
            let w = mu / c + self.y[b.row];
            for &(slot, k) in &b.slots {
                rz[k] += w * ev.jac[slot];
            }
        }
        let h = self.residual(ev, &self.z);
        let rc: Vec<f64> = h.iter().map(|v| -v).collect();
        let (dz, mut dy) = self.solve_reduced(&vals, &sigma, dw, &rz, &rc);
        for b in &self.barrier {
            let c = ev.c[b.row];
            let lam = -self.y[b.row];
            let dc: f64 = b.slots.iter().map(|&(slot, k)| ev.jac[slot] * dz[k]).sum();
            dy[b.row] = -(mu / c - lam - lam / c * dc);
        }
        let mut dzl = vec![0.0; dz.len()];
        let mut dzu = vec![0.0; dz.len()];
        for k in 0..dz.len() {
            if sl[k].is_finite() {
                dzl[k] = mu / sl[k] - self.zl[k] - self.zl[k] / sl[k] * dz[k];
            }
            if su[k].is_finite() {
                dzu[k] = mu / su[k] - self.zu[k] + self.zu[k] / su[k] * dz[k];
            }
        }
        if !dz.iter().chain(&dy).all(|v| v.is_finite()) {
            return None;
        }
        Some((Step { dz, dy, dzl, dzu }, vals, shift, sigma, dw))
    }

    fn max_primal_step(&self, z: &[f64], dz: &[f64], tau: f64) -> f64 {
        let mut alpha: f64 = 1.0;
        for k in 0..z.len() {
            if dz[k] < 0.0 && finite(self.lb[k]) {
                alpha = alpha.min(-tau * (z[k] - self.lb[k]) / dz[k]);
            }
            if dz[k] > 0.0 && finite(self.ub[k]) {
                alpha = alpha.min(tau * (self.ub[k] - z[k]) / dz[k]);
            }
        }
        alpha.max(0.0)
    }

    fn max_dual_step(&self, step: &Step, tau: f64) -> f64 {
        let mut alpha: f64 = 1.0;
        for k in 0..self.z.len() {
            if step.dzl[k] < 0.0 && self.zl[k] > 0.0 {
                alpha = alpha.min(-tau * self.zl[k] / step.dzl[k]);
            }
            if step.dzu[k] < 0.0 && self.zu[k] > 0.0 {
                alpha = alpha.min(-tau * self.zu[k] / step.dzu[k]);
            }
        }
        for b in &self.barrier {
            // λ = -y
            let (lam, dlam) = (-self.y[b.row], -step.dy[b.row]);
            if dlam < 0.0 && lam > 0.0 {
                alpha = alpha.min(-tau * lam / dlam);
            }
        }
        alpha
    }

    /// Relaxes a bound whose slack has dropped to rounding level.
    fn move_tiny_slacks(&mut self) {
        let move_by = f64::EPSILON.powf(0.75);
        for k in 0..self.z.len() {
            let v = self.z[k];
            let floor = f64::EPSILON * v.abs().max(1.0);
            if finite(self.lb[k]) && v - self.lb[k] < floor {
                self.lb[k] = self.lb[k].min(v) - move_by * self.lb[k].abs().max(1.0);
            }
            if finite(self.ub[k]) && self.ub[k] - v < floor {
                self.ub[k] = self.ub[k].max(v) + move_by * self.ub[k].abs().max(1.0);
            }
        }
    }

    fn safeguard_bound_multipliers(&mut self, mu: f64) {
        let (sl, su) = self.slacks(&self.z);
        for k in 0..self.z.len() {
            if sl[k].is_finite() {
                self.zl[k] = self.zl[k]
                    .min(KAPPA_SIGMA * mu / sl[k])
                    .max(mu / (KAPPA_SIGMA * sl[k]));
            }
            if su[k].is_finite() {
                self.zu[k] = self.zu[k]
                    .min(KAPPA_SIGMA * mu / su[k])
                    .max(mu / (KAPPA_SIGMA * su[k]));
            }
        }
    }

    fn outcome(&self, status: SolveStatus, iterations: usize, e0: f64) -> SolveOutcome {
        let x = self.x_full(&self.z);
        let objective = self.p.objective_value(&x);
        let ys: Vec<f64> = self
            .y
            .iter()
            .zip(&self.con_scale)
            .map(|(y, s)| y * s / self.obj_scale)
            .collect();
        let mut zl = vec![0.0; self.n];
        let mut zu = vec![0.0; self.n];
        for (k, &j) in self.free.iter().enumerate() {
            zl[j] = self.zl[k] / self.obj_scale;
            zu[j] = self.zu[k] / self.obj_scale;
        }
        // multipliers of fixed variables from stationarity
        let mut grad = vec![0.0; self.n];
        self.comp.gradient(self.p, &x, &mut grad);
        let mut jac = vec![0.0; self.comp.jac.len()];
        self.comp.jacobian(self.p, &x, &mut jac);
        let mut g = grad.clone();
        for (slot, &(row, col)) in self.comp.jac.iter().enumerate() {
            g[col] += jac[slot] * ys[row];
        }
        let mut is_free = vec![false; self.n];
        for &j in &self.free {
            is_free[j] = true;
        }
        for j in 0..self.n {
            if !is_free[j] {
                zl[j] = g[j].max(0.0);
                zu[j] = (-g[j]).max(0.0);
            }
        }
        // Lagrangian value
        let mut c = vec![0.0; self.m];
        self.comp.constraints(self.p, &x, &mut c);
        let mut dual = objective;
        for (i, con) in self.p.constraints.iter().enumerate() {
            let k = self.ineq_of[i];
            let target = if k == NONE {
                con.lower
            } else {
                self.z[self.nf + k] / self.con_scale[i]
            };
            dual += ys[i] * (c[i] - target);
        }
        for (k, &j) in self.free.iter().enumerate() {
            let v = &self.p.vars[j];
            if finite(v.lower) {
                dual -= zl[j] * (x[j] - v.lower);
            }
            if finite(v.upper) {
                dual -= zu[j] * (v.upper - x[j]);
            }
            let _ = k;
        }
        for (k, &i) in self.ineq.iter().enumerate() {
            let con = &self.p.constraints[i];
            let s = self.z[self.nf + k] / self.con_scale[i];
            let scale = self.con_scale[i] / self.obj_scale;
            if finite(con.lower) {
                dual -= self.zl[self.nf + k] * scale * (s - con.lower);
            }
            if finite(con.upper) {
                dual -= self.zu[self.nf + k] * scale * (con.upper - s);
            }
        }
        SolveOutcome {
            status,
            objective,
            max_violation: self.p.max_violation(&x),
            x,
            constraint_multipliers: ys,
            bound_multipliers_lower: zl,
            bound_multipliers_upper: zu,
            iterations,
            wall_time: 0.0,
            kkt_error: e0,
            dual_objective: dual,
            convex: self.p.meta.convex,
        }
    }

    /// Scaled ∞-norm constraint violation at full point `x`.
    fn scaled_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, con) in self.p.constraints.iter().enumerate() {
            worst = worst.max(self.con_scale[i] * con.violation(con.expr.value(x)));
        }
        worst
    }

    /// ℓ1 feasibility restoration. Also returns the iteration counter after
    /// the restoration solve.
    fn restore(
        &mut self,
        sink: &mut dyn FnMut(&IterLog),
        start: Instant,
        iter: usize,
        mu: f64,
    ) -> (Restoration, usize) {
        let p = self.p;
        let xbar = self.x_full(&self.z);
        let mut rp = NlpProblem::new(&format!("{}-restoration", p.meta.tag), p.meta.load_factor, p.meta.convex);
        for (j, v) in p.vars.iter().enumerate() {
            rp.add_var(v.name.clone(), v.lower, v.upper, xbar[j]);
        }
        let zeta = 1e-5;
        let mut obj = Expr::new();
        for &j in &self.free {
            let d = 1.0 / xbar[j].abs().max(1.0);
            let w = zeta * d * d;
            obj = obj
                .square(0.5 * w, j)
                .linear(j, -w * xbar[j])
                .add_const(0.5 * w * xbar[j] * xbar[j]);
        }
        for (i, con) in p.constraints.iter().enumerate() {
            let val = con.expr.value(&xbar);
            let v = val - val.clamp(con.lower, con.upper);
            let eps = mu.max(1e-4);
            let pi = rp.add_var(format!("p{i}"), 0.0, f64::INFINITY, v.max(0.0) + eps);
            let ni = rp.add_var(format!("n{i}"), 0.0, f64::INFINITY, (-v).max(0.0) + eps);
            obj = obj.linear(pi, self.con_scale[i]).linear(ni, self.con_scale[i]);
            let expr = con.expr.clone().linear(pi, -1.0).linear(ni, 1.0);
            rp.add_range(con.name.clone(), expr, con.lower, con.upper);
        }
        rp.objective = obj;
        let mut ropts = self.opts.clone();
        ropts.restoration = false;
        ropts.max_iterations = self.opts.max_iterations.saturating_sub(iter).max(50);
        let inner = Ipm::new(&rp, ropts);
        let out = inner.run(sink, start, iter, true);
        let xr = &out.x[..self.n];
        let viol = self.scaled_violation(xr);
        let infeasible_tol = (100.0 * self.opts.kkt_tolerance).max(1e-6);
        let used = out.iterations;
        if out.status == SolveStatus::Optimal && viol > infeasible_tol {
            self.z = self.free.iter().map(|&j| xr[j]).collect();
            self.append_slacks(xr);
            return (Restoration::Infeasible, used);
        }
        if viol > infeasible_tol {
            let status = match out.status {
                SolveStatus::IterationLimit | SolveStatus::TimeLimit => out.status,
                _ => SolveStatus::NumericFailure,
            };
            return (Restoration::Failed(status), used);
        }
        // restart the main phase from the restored point
        self.z = self.free.iter().map(|&j| xr[j]).collect();
        self.append_slacks(xr);
        let (sl, su) = self.slacks(&self.z);
        for k in 0..self.z.len() {
            self.zl[k] = if sl[k].is_finite() { (mu / sl[k]).min(1e3) } else { 0.0 };
            self.zu[k] = if su[k].is_finite() { (mu / su[k]).min(1e3) } else { 0.0 };
        }
        self.y = vec![0.0; self.m];
        self.least_squares_multipliers();
        (Restoration::Restored, used)
    }

    fn append_slacks(&mut self, x: &[f64]) {
        self.z.truncate(self.nf);
        for (k, &i) in self.ineq.iter().enumerate() {
            let idx = self.nf + k;
            let c = self.p.constraints[i].expr.value(x) * self.con_scale[i];
            self.z.push(push_inside(c, self.lb[idx], self.ub[idx]));
        }
    }

    fn run(
        mut self,
        sink: &mut dyn FnMut(&IterLog),
        start: Instant,
        iter_offset: usize,
        in_restoration: bool,
    ) -> SolveOutcome {
        let tol = self.opts.kkt_tolerance;
        let mu_min = tol / 11.0;
        let mut mu = self.opts.initial_barrier;
        let mut tau = TAU_MIN.max(1.0 - mu);
        let mut nu: f64 = 1e-6;
        let mut restorations = 0;
        let mut extra_iters = 0;
        let mut theta_hist: Vec<f64> = Vec::new();
        let mut last_restoration = 0usize;
        let mut alpha_prev = 0.0;
        let mut force_mu_update = false;
        let mut acceptable = 0;

        let Some(mut ev) = self.eval(&self.z) else {
            return self.outcome(SolveStatus::NumericFailure, iter_offset, f64::INFINITY);
        };
        let mut iter = 0;
        loop {
            self.mu = mu;
            let (e0, mut emu, inf_pr, inf_du) = self.errors(&ev, mu);
            sink(&IterLog {
                iteration: iter_offset + iter + extra_iters,
                objective: ev.f / self.obj_scale,
                primal_infeasibility: inf_pr,
                dual_infeasibility: inf_du,
                barrier: mu,
                step: alpha_prev,
                restoration: in_restoration,
            });
            let total = iter + extra_iters;
            if e0 <= tol {
                return self.outcome(SolveStatus::Optimal, iter_offset + total, e0);
            }
            if in_restoration && inf_pr <= ACCEPTABLE_VIOL && e0 <= ACCEPTABLE_TOL {
                acceptable += 1;
                if acceptable >= ACCEPTABLE_ITERS {
                    return self.outcome(SolveStatus::Optimal, iter_offset + total, e0);
                }
            } else {
                acceptable = 0;
            }
            if start.elapsed().as_secs_f64() > self.opts.time_limit {
                return self.outcome(SolveStatus::TimeLimit, iter_offset + total, e0);
            }
            theta_hist.push(inf_pr);
            let stalled = iter >= last_restoration + STALL_WINDOW
                && inf_pr > 1e-6
                && inf_pr > 0.99 * theta_hist[iter - STALL_WINDOW];
            let diverging = (0..self.m).any(|i| !self.is_barrier[i] && self.y[i].abs() > 1e12);
            let at_limit = iter_offset + total >= self.opts.max_iterations;
            if at_limit && !(self.opts.restoration && inf_pr > 1e-6 && restorations < MAX_RESTORATIONS) {
                return self.outcome(SolveStatus::IterationLimit, iter_offset + total, e0);
            }

            // barrier update
            while (emu <= KAPPA_EPS * mu || force_mu_update) && mu > mu_min {
                force_mu_update = false;
                mu = mu_min.max((self.opts.barrier_reduction * mu).min(mu.powf(BARRIER_POWER)));
                tau = TAU_MIN.max(1.0 - mu);
                self.mu = mu;
                emu = self.errors(&ev, mu).1;
            }
            force_mu_update = false;

            let mut need_restoration = stalled || diverging || at_limit;
            let mut accepted = false;
            if !need_restoration {
                match self.newton_step(&ev, mu) {
                    None => need_restoration = true,
                    Some((step, vals, shift, sigma, dw)) => {
                        match self.line_search(&ev, &step, mu, tau, &mut nu, &vals, &shift, &sigma, dw) {
                            Some((z_new, ev_new, alpha, tiny)) => {
                                let alpha_z = self.max_dual_step(&step, tau);
                                self.z = z_new;
                                for i in 0..self.m {
                                    let a = if self.is_barrier[i] { alpha_z } else { alpha };
                                    self.y[i] += a * step.dy[i];
                                }
                                for k in 0..self.z.len() {
                                    self.zl[k] += alpha_z * step.dzl[k];
                                    self.zu[k] += alpha_z * step.dzu[k];
                                }
                                self.move_tiny_slacks();
                                self.safeguard_bound_multipliers(mu);
                                ev = ev_new;
                                self.safeguard_barrier_duals(&ev, mu);
                                alpha_prev = alpha;
                                force_mu_update = tiny;
                                accepted = true;
                            }
                            None => need_restoration = true,
                        }
                    }
                }
            }
            if !accepted && need_restoration {
                if !self.opts.restoration || restorations >= MAX_RESTORATIONS {
                    let status = if at_limit {
                        SolveStatus::IterationLimit
                    } else {
                        SolveStatus::NumericFailure
                    };
                    return self.outcome(status, iter_offset + total, e0);
                }
                restorations += 1;
                let (result, used) = self.restore(sink, start, iter_offset + total, mu);
                extra_iters += used.saturating_sub(iter_offset + total);
                match result {
                    Restoration::Restored => {}
                    Restoration::Failed(status) => {
                        return self.outcome(status, iter_offset + iter + extra_iters, e0);
                    }
                    Restoration::Infeasible => {
                        let e_final = self.eval(&self.z).map_or(e0, |e| self.errors(&e, 0.0).0);
                        return self.outcome(SolveStatus::LocallyInfeasible, iter_offset + iter + extra_iters, e_final);
                    }
                }
                let Some(e) = self.eval(&self.z) else {
                    return self.outcome(SolveStatus::NumericFailure, iter_offset + iter + extra_iters, e0);
                };
                ev = e;
                nu = 1e-6;
                last_restoration = iter + 1;
                if at_limit {
                    let e_final = self.errors(&ev, 0.0).0;
                    let status = if e_final <= tol {
                        SolveStatus::Optimal
                    } else {
                        SolveStatus::IterationLimit
                    };
                    return self.outcome(status, iter_offset + iter + extra_iters, e_final);
                }
            }
            iter += 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn line_search(
        &self,
        ev: &Evals,
        step: &Step,
        mu: f64,
        tau: f64,
        nu: &mut f64,
        vals: &[f64],
        shift: &[f64],
        sigma: &[f64],
        dw: f64,
    ) -> Option<(Vec<f64>, Evals, f64, bool)> {
        let z = &self.z;
        let dz = &step.dz;
        let alpha_max = self.max_primal_step(z, dz, tau);
        let tiny = dz
            .iter()
            .zip(z)
            .all(|(d, v)| d.abs() <= 10.0 * f64::EPSILON * (1.0 + v.abs()));
        if tiny {
            let z_new: Vec<f64> = z.iter().zip(dz).map(|(a, b)| a + alpha_max * b).collect();
            let ev_new = self.eval(&z_new)?;
            return Some((z_new, ev_new, alpha_max, true));
        }

        // penalty parameter so that dz is a descent direction of the merit
        let h = self.residual(ev, z);
        let h1: f64 = h.iter().map(|v| v.abs()).sum();
        let gphi = self.barrier_gradient(ev, z, mu);
        let gd: f64 = gphi.iter().zip(dz).map(|(a, b)| a * b).sum();
        if h1 > 0.0 {
            // dzᵀ(W+Σ)dz from the assembled matrix, free block only
            let mut full = vec![0.0; self.nf + self.m];
            full[..self.nf].copy_from_slice(&dz[..self.nf]);
            let mut kd = vec![0.0; full.len()];
            let mut shift_x = shift.to_vec();
            for v in shift_x[self.nf..].iter_mut() {
                *v = 0.0;
            }
            let mut hv = vals.to_vec();
            for (e, &(i, _)) in self.kkt.iter().enumerate() {
                if i >= self.nf {
                    hv[e] = 0.0;
                }
            }
            sym_matvec(&self.kkt, &hv, &shift_x, &full, &mut kd);
            let mut curv: f64 = (0..self.nf).map(|k| kd[k] * dz[k]).sum();
            for k in self.nf..dz.len() {
                curv += (sigma[k] + dw) * dz[k] * dz[k];
            }
            let nu_trial = (gd + 0.5 * curv.max(0.0)) / ((1.0 - 0.1) * h1);
            if *nu < nu_trial {
                *nu = (1.5 * nu_trial).max(*nu);
            }
        }
        let phi0 = self.barrier_merit(ev, z, mu, *nu);
        let dphi = gd - *nu * h1;

        // comparisons tolerate rounding in the merit value itself
        let noise = 10.0 * f64::EPSILON * phi0.abs();
        let mut alpha = alpha_max;
        let mut first = true;
        while alpha >= ALPHA_MIN {
            let z_t: Vec<f64> = z.iter().zip(dz).map(|(a, b)| a + alpha * b).collect();
            if let Some(ev_t) = self.eval(&z_t).filter(|e| self.keeps_interior(ev, e, tau)) {
                let phi_t = self.barrier_merit(&ev_t, &z_t, mu, *nu);
                if phi_t <= phi0 + ARMIJO * alpha * dphi.min(0.0) + noise || (dphi >= 0.0 && phi_t < phi0) {
                    return Some((z_t, ev_t, alpha, false));
                }
                if first {
                    // second-order correction against the constraint curvature
                    let h_t = self.residual(&ev_t, &z_t);
                    let rz = vec![0.0; dz.len()];
                    let rc: Vec<f64> = h_t.iter().map(|v| -v).collect();
                    let (dz2, _) = self.solve_reduced(vals, sigma, dw, &rz, &rc);
                    let d_soc: Vec<f64> = (0..dz.len()).map(|k| alpha * dz[k] + dz2[k]).collect();
                    let a_soc = self.max_primal_step(z, &d_soc, tau);
                    if a_soc >= 1.0 {
                        let z_s: Vec<f64> = z.iter().zip(&d_soc).map(|(a, b)| a + b).collect();
                        if let Some(ev_s) = self.eval(&z_s).filter(|e| self.keeps_interior(ev, e, tau)) {
                            let phi_s = self.barrier_merit(&ev_s, &z_s, mu, *nu);
                            if phi_s <= phi0 + ARMIJO * alpha * dphi.min(0.0) + noise {
                                return Some((z_s, ev_s, alpha, false));
                            }
                        }
                    }
                }
            }
            first = false;
            alpha *= 0.5;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn unconstrained_quadratic() {
        let mut p = NlpProblem::new("q", 1.0, true);
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        p.objective = Expr::new().square(1.0, x).linear(x, -6.0).add_const(9.0);
        let out = solve(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.x[0] - 3.0).abs() < 1e-8);
        assert!(out.objective.abs() < 1e-12);
    }

    #[test]
    fn active_lower_bound() {
        let mut p = NlpProblem::new("b", 1.0, true);
        let x = p.add_var("x", 2.0, f64::INFINITY, 5.0);
        p.objective = Expr::var(x);
        let out = solve(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.x[0] - 2.0).abs() < 1e-7);
        assert!((out.bound_multipliers_lower[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equality_constrained_nonconvex() {
        // min x + y on the unit circle → (-1/√2, -1/√2)
        let mut p = NlpProblem::new("circle", 1.0, false);
        let x = p.add_var("x", -2.0, 2.0, 0.5);
        let y = p.add_var("y", -2.0, 2.0, 0.1);
        p.objective = Expr::var(x).linear(y, 1.0);
        p.add_eq("circle", Expr::new().square(1.0, x).square(1.0, y), 1.0);
        let out = solve(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let r = -std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.x[0] - r).abs() < 1e-6 && (out.x[1] - r).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn range_constraints_and_fixed_vars() {
        // min (x-3)² + (y+1)² s.t. 0 <= x + y <= 1, z fixed at 2, x*z <= 3
        let mut p = NlpProblem::new("r", 1.0, true);
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let y = p.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let z = p.add_var("z", 2.0, 2.0, 2.0);
        p.objective = Expr::new()
            .square(1.0, x)
            .linear(x, -6.0)
            .square(1.0, y)
            .linear(y, 2.0)
            .add_const(10.0);
        p.add_range("sum", Expr::var(x).linear(y, 1.0), 0.0, 1.0);
        p.add_le0("prod", Expr::new().product(1.0, x, z).add_const(-3.0));
        let out = solve(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        // x*z <= 3 caps x at 1.5; then x + y = 0.5 leaves y at its free optimum
        assert!((out.x[0] - 1.5).abs() < 1e-6, "{:?}", out.x);
        assert!((out.x[1] + 1.0).abs() < 1e-6, "{:?}", out.x);
        assert_eq!(out.x[2], 2.0);
        assert!(out.dual_objective <= out.objective + 1e-6 * (1.0 + out.objective.abs()));
    }

    #[test]
    fn detects_infeasible_convex_problem() {
        // x² + y² <= 1 and x + y >= 3
        let mut p = NlpProblem::new("infeasible", 1.0, true);
        let x = p.add_var("x", -10.0, 10.0, 0.0);
        let y = p.add_var("y", -10.0, 10.0, 0.0);
        p.objective = Expr::var(x);
        p.add_le0("disk", Expr::new().square(1.0, x).square(1.0, y).add_const(-1.0));
        p.add_range("line", Expr::var(x).linear(y, 1.0), 3.0, f64::INFINITY);
        let out = solve(&p, &opts()).unwrap();
        assert_eq!(out.status, SolveStatus::LocallyInfeasible);
        assert!(out.convex);
        assert!(out.max_violation > 1e-3);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut p = NlpProblem::new("bad", 1.0, true);
        p.add_var("x", 1.0, 0.0, 0.5);
        assert!(matches!(solve(&p, &opts()), Err(Error::InconsistentProblem(_))));
    }

    #[test]
    fn iteration_log_and_barrier_monotone() {
        let mut p = NlpProblem::new("log", 1.0, true);
        let x = p.add_var("x", 0.0, 10.0, 5.0);
        let y = p.add_var("y", 0.0, 10.0, 5.0);
        p.objective = Expr::new().square(1.0, x).square(2.0, y).linear(x, -1.0);
        p.add_range("c", Expr::var(x).linear(y, 1.0), 1.0, f64::INFINITY);
        let mut logs = Vec::new();
        let out = solve_logged(&p, &opts(), &mut |l| logs.push(*l)).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(!logs.is_empty());
        for w in logs.windows(2) {
            assert!(w[1].barrier <= w[0].barrier);
        }
    }
}
