use crate::error::{Error, Result};
use crate::network::{LoadSet, Network};
use crate::nlp::{Expr, NlpProblem, TrigKind};

use super::common::{add_balance, add_dispatch, add_flows, check_factor, clamp_init, cost_objective};
use super::topology::{BranchData, Topology};
use super::{AcSolution, Formulation, Layout, Model};

/// Polar AC-OPF with cost objective.
pub fn build_ac_opf(net: &Network, t: f64, scaled: &LoadSet) -> Result<Formulation> {
    let mut f = build_polar(net, t, scaled, "ac")?;
    f.problem.objective = cost_objective(net, &f.layout);
    f.model = Some(Model::Ac);
    Ok(f)
}

/// Same feasible set as [`build_ac_opf`] with objective `Σ (p_g - target_g)²`.
pub fn build_load_flow(net: &Network, t: f64, scaled: &LoadSet, target: &[f64]) -> Result<Formulation> {
    let ng = net.generators().len();
    if target.len() != ng {
        return Err(Error::Formulation(format!(
            "target dispatch has {} entries but the network has {ng} generators",
            target.len()
        )));
    }
    if let Some(g) = target.iter().position(|v| !v.is_finite()) {
        return Err(Error::Formulation(format!(
            "target dispatch for generator {} is not finite",
            net.generators()[g].id
        )));
    }
    let mut f = build_polar(net, t, scaled, "loadflow")?;
    let mut obj = Expr::new();
    for (&v, &p) in f.layout.pg.iter().zip(target) {
        obj = obj.square(1.0, v).linear(v, -2.0 * p).add_const(p * p);
    }
    f.problem.objective = obj;
    Ok(f)
}

/// `[p_f, q_f, p_t, q_t]` of a branch as expressions in polar variables.
fn polar_flow_defs(br: &BranchData, vm: &[usize], va: &[usize]) -> [Expr; 4] {
    let (f, t) = (br.from, br.to);
    let rows = br.flow_w_rows();
    // W_ff = vf², W_tt = vt², wr = vf vt cos(af - at), wi = vf vt sin(af - at)
    let mut out: [Expr; 4] = Default::default();
    for (j, row) in rows.iter().enumerate() {
        out[j] = Expr::new()
            .square(row[0], vm[f])
            .square(row[1], vm[t])
            .trig(row[2], [vm[f], vm[t]], [va[f], va[t]], 0.0, TrigKind::Cos)
            .trig(row[3], [vm[f], vm[t]], [va[f], va[t]], 0.0, TrigKind::Sin);
    }
    out
}

fn build_polar(net: &Network, t: f64, scaled: &LoadSet, tag: &str) -> Result<Formulation> {
    check_factor(t)?;
    let topo = Topology::new(net)?;
    let mut p = NlpProblem::new(tag, t, false);
    let mut layout = Layout::default();
    add_polar_voltages(&mut p, net, &mut layout);
    add_dispatch(&mut p, net, &mut layout);
    let (vm, va) = (layout.vm.clone(), layout.va.clone());
    add_flows(&mut p, net, &topo, &mut layout, |k| polar_flow_defs(&topo.branches[k], &vm, &va));
    add_angle_differences(&mut p, net, &topo, &layout);
    add_balance(&mut p, net, &topo, &layout, t, scaled, |n| Expr::new().square(1.0, vm[n]));
    Ok(Formulation {
        model: None,
        problem: p,
        layout,
        topology: topo,
    })
}

pub(crate) fn add_polar_voltages(p: &mut NlpProblem, net: &Network, layout: &mut Layout) {
    let reference = net.reference_bus();
    for bus in net.buses() {
        layout
            .vm
            .push(p.add_var(format!("vm{}", bus.id), bus.vmin, bus.vmax, clamp_init(1.0, bus.vmin, bus.vmax)));
    }
    for (n, bus) in net.buses().iter().enumerate() {
        let (lo, hi) = if n == reference {
            (0.0, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        layout.va.push(p.add_var(format!("va{}", bus.id), lo, hi, 0.0));
    }
}

/// `-θ̄ ≤ θ_a - θ_b ≤ θ̄` per connected pair.
pub(crate) fn add_angle_differences(p: &mut NlpProblem, net: &Network, topo: &Topology, layout: &Layout) {
    for (k, &(a, b)) in topo.pairs.iter().enumerate() {
        let th = topo.pair_angle[k];
        let e = Expr::var(layout.va[a]).linear(layout.va[b], -1.0);
        let name = format!("angle{}_{}", net.buses()[a].id, net.buses()[b].id);
        p.add_range(name, e, -th, th);
    }
}

/// Maximum absolute violations of an [`AcSolution`], in p.u.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeasibilityReport {
    pub balance: f64,
    pub flow_definition: f64,
    pub voltage_bounds: f64,
    pub dispatch_bounds: f64,
    pub angle: f64,
    pub flow_limit: f64,
}

impl FeasibilityReport {
    pub fn max(&self) -> f64 {
        [
            self.balance,
            self.flow_definition,
            self.voltage_bounds,
            self.dispatch_bounds,
            self.angle,
            self.flow_limit,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn outside(v: f64, lo: f64, hi: f64) -> f64 {
    (lo - v).max(v - hi).max(0.0)
}

/// Evaluates the AC constraints at `sol` directly from the network data.
/// Balance uses flows recomputed from the voltages; the stated flows are
/// checked against those separately.
pub fn evaluate_feasibility(net: &Network, sol: &AcSolution, t: f64, scaled: &LoadSet) -> Result<FeasibilityReport> {
    let topo = Topology::new(net)?;
    let nb = net.buses().len();
    let nl = topo.branches.len();
    let ng = net.generators().len();
    if sol.vm.len() != nb || sol.va.len() != nb || sol.pg.len() != ng || sol.qg.len() != ng {
        return Err(Error::Formulation("solution dimensions do not match the network".into()));
    }
    let stated_flows = sol.pf.len() == nl && sol.qf.len() == nl && sol.pt.len() == nl && sol.qt.len() == nl;
    let mut rep = FeasibilityReport::default();
    let mut inj_p = vec![0.0; nb];
    let mut inj_q = vec![0.0; nb];
    for (k, br) in topo.branches.iter().enumerate() {
        let fl = br.flows_polar(sol.vm[br.from], sol.vm[br.to], sol.va[br.from], sol.va[br.to]);
        if stated_flows {
            let stated = [sol.pf[k], sol.qf[k], sol.pt[k], sol.qt[k]];
            for j in 0..4 {
                rep.flow_definition = rep.flow_definition.max((stated[j] - fl[j]).abs());
            }
        }
        inj_p[br.from] += fl[0];
        inj_q[br.from] += fl[1];
        inj_p[br.to] += fl[2];
        inj_q[br.to] += fl[3];
        if br.s_max.is_finite() {
            let sf = fl[0].hypot(fl[1]);
            let st = fl[2].hypot(fl[3]);
            rep.flow_limit = rep.flow_limit.max(sf.max(st) - br.s_max);
        }
    }
    for (k, &(a, b)) in topo.pairs.iter().enumerate() {
        rep.angle = rep.angle.max((sol.va[a] - sol.va[b]).abs() - topo.pair_angle[k]);
    }
    let demand = net.bus_demand(t, scaled);
    let shunt = net.bus_shunt();
    let gens = net.generators_by_bus();
    for (n, bus) in net.buses().iter().enumerate() {
        let v2 = sol.vm[n] * sol.vm[n];
        let gp: f64 = gens[n].iter().map(|&g| sol.pg[g]).sum();
        let gq: f64 = gens[n].iter().map(|&g| sol.qg[g]).sum();
        let rp = gp - demand[n].re - shunt[n].re * v2 - inj_p[n];
        let rq = gq - demand[n].im + shunt[n].im * v2 - inj_q[n];
        rep.balance = rep.balance.max(rp.abs()).max(rq.abs());
        rep.voltage_bounds = rep.voltage_bounds.max(outside(sol.vm[n], bus.vmin, bus.vmax));
    }
    for (g, gen) in net.generators().iter().enumerate() {
        rep.dispatch_bounds = rep
            .dispatch_bounds
            .max(outside(sol.pg[g], gen.pmin, gen.pmax))
            .max(outside(sol.qg[g], gen.qmin, gen.qmax));
    }
    rep.angle = rep.angle.max(0.0);
    rep.flow_limit = rep.flow_limit.max(0.0);
    Ok(rep)
}
