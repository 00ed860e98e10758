//! Pieces shared by the polar and lifted builders.

use crate::error::{Error, Result};
use crate::network::{LoadSet, Network};
use crate::nlp::{Expr, NlpProblem};

use super::topology::Topology;
use super::Layout;

pub(crate) fn check_factor(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Formulation(format!("load factor must be positive, got {t}")))
    }
}

fn mid(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

pub(crate) fn clamp_init(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

pub(crate) fn add_dispatch(p: &mut NlpProblem, net: &Network, layout: &mut Layout) {
    for g in net.generators() {
        layout
            .pg
            .push(p.add_var(format!("pg{}", g.id), g.pmin, g.pmax, mid(g.pmin, g.pmax)));
    }
    for g in net.generators() {
        layout
            .qg
            .push(p.add_var(format!("qg{}", g.id), g.qmin, g.qmax, mid(g.qmin, g.qmax)));
    }
}

pub(crate) fn cost_objective(net: &Network, layout: &Layout) -> Expr {
    let mut obj = Expr::new();
    for (g, &v) in net.generators().iter().zip(&layout.pg) {
        obj = obj.square(g.cost_c2, v).linear(v, g.cost_c1).add_const(g.cost_c0);
    }
    obj
}

/// Adds the four flow variables of every branch and their defining
/// equalities `flow - def(x) = 0`. `defs(k)` returns the four defining
/// expressions of branch `k` over already-declared variables.
pub(crate) fn add_flows(
    p: &mut NlpProblem,
    net: &Network,
    topo: &Topology,
    layout: &mut Layout,
    defs: impl Fn(usize) -> [Expr; 4],
) {
    for (k, br) in topo.branches.iter().enumerate() {
        let id = net.branches()[k].id;
        let x0 = p.initial_point();
        let d = defs(k);
        let (lo, hi) = if br.s_max.is_finite() {
            (-br.s_max, br.s_max)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        let mut vars = [0usize; 4];
        for (j, name) in ["pf", "qf", "pt", "qt"].iter().enumerate() {
            let init = clamp_init(d[j].value(&x0), lo, hi);
            vars[j] = p.add_var(format!("{name}{id}"), lo, hi, init);
        }
        for (j, name) in ["pf", "qf", "pt", "qt"].iter().enumerate() {
            let e = Expr::var(vars[j]).extend(d[j].clone().scaled(-1.0));
            p.add_eq(format!("def_{name}{id}"), e, 0.0);
        }
        layout.pf.push(vars[0]);
        layout.qf.push(vars[1]);
        layout.pt.push(vars[2]);
        layout.qt.push(vars[3]);
        if br.s_max.is_finite() {
            let s2 = br.s_max * br.s_max;
            let ef = Expr::new().square(1.0, vars[0]).square(1.0, vars[1]);
            let et = Expr::new().square(1.0, vars[2]).square(1.0, vars[3]);
            p.add_range(format!("smax_f{id}"), ef, f64::NEG_INFINITY, s2);
            p.add_range(format!("smax_t{id}"), et, f64::NEG_INFINITY, s2);
        }
    }
}

/// Bus power balance. `vsq(n)` is the expression for `|V_n|²`.
pub(crate) fn add_balance(
    p: &mut NlpProblem,
    net: &Network,
    topo: &Topology,
    layout: &Layout,
    t: f64,
    scaled: &LoadSet,
    vsq: impl Fn(usize) -> Expr,
) {
    let demand = net.bus_demand(t, scaled);
    let shunt = net.bus_shunt();
    let gens = net.generators_by_bus();
    for (n, bus) in net.buses().iter().enumerate() {
        let mut ep = Expr::new();
        let mut eq = Expr::new();
        for &g in &gens[n] {
            ep = ep.linear(layout.pg[g], 1.0);
            eq = eq.linear(layout.qg[g], 1.0);
        }
        for (k, br) in topo.branches.iter().enumerate() {
            if br.from == n {
                ep = ep.linear(layout.pf[k], -1.0);
                eq = eq.linear(layout.qf[k], -1.0);
            }
            if br.to == n {
                ep = ep.linear(layout.pt[k], -1.0);
                eq = eq.linear(layout.qt[k], -1.0);
            }
        }
        if shunt[n].re != 0.0 {
            ep = ep.extend(vsq(n).scaled(-shunt[n].re));
        }
        if shunt[n].im != 0.0 {
            eq = eq.extend(vsq(n).scaled(shunt[n].im));
        }
        p.add_eq(format!("bal_p{}", bus.id), ep, demand[n].re);
        p.add_eq(format!("bal_q{}", bus.id), eq, demand[n].im);
    }
}
