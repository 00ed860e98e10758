use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::network::{LoadSet, Network};
use crate::nlp::{Expr, NlpProblem};

use super::ac::{add_angle_differences, add_polar_voltages};
use super::common::{add_balance, add_dispatch, add_flows, check_factor, clamp_init, cost_objective};
use super::envelope::{make_envelopes, McCormick};
use super::topology::{triangles, Topology};
use super::{Formulation, Layout, Model};

/// Second-order cone relaxation: one rotated cone per connected bus pair.
pub fn build_socp(net: &Network, t: f64, scaled: &LoadSet) -> Result<Formulation> {
    build_lifted(net, t, scaled, Model::Socp)
}

/// Principal-minor SDP relaxation. Order 2 is the SOCP constraint set;
/// order 3 adds the 3×3 determinant of every bus triangle (its order-1 and
/// order-2 minors are already the W bounds and pair cones).
pub fn build_sdp(net: &Network, t: f64, scaled: &LoadSet, minor_order: usize) -> Result<Formulation> {
    match minor_order {
        2 => build_lifted(net, t, scaled, Model::Sdp2),
        3 => build_lifted(net, t, scaled, Model::Sdp3),
        _ => Err(Error::Formulation(format!(
            "minor order must be 2 or 3, got {minor_order}"
        ))),
    }
}

/// Quadratic-convex relaxation in polar plus lifted variables.
pub fn build_qc(net: &Network, t: f64, scaled: &LoadSet) -> Result<Formulation> {
    build_lifted(net, t, scaled, Model::Qc)
}

/// The seven principal minors of the Hermitian matrix
/// `[[a, x, y], [x*, b, z], [y*, z*, c]]` with `x = W_ij`, `y = W_ik`,
/// `z = W_jk` given as `(re, im)`.
pub fn triangle_minors(diag: [f64; 3], x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> [f64; 7] {
    let [a, b, c] = diag;
    let n2 = |v: (f64, f64)| v.0 * v.0 + v.1 * v.1;
    let det = a * b * c - a * n2(z) - b * n2(y) - c * n2(x)
        + 2.0 * (x.0 * z.0 * y.0 - x.1 * z.1 * y.0 + x.0 * z.1 * y.1 + x.1 * z.0 * y.1);
    [a, b, c, a * b - n2(x), a * c - n2(y), b * c - n2(z), det]
}

/// `W_ii · det(W)` for the triangle block, written as
/// `m_ij m_ik - |W_ii W_jk - conj(W_ij) W_ik|²` so that it stays accurate
/// near rank one.
fn determinant_expr(w: [usize; 3], x: (usize, usize), y: (usize, usize), z: (usize, usize)) -> Expr {
    let [a, b, c] = w;
    let minor = |d: usize, v: (usize, usize)| Expr::new().product(1.0, a, d).square(-1.0, v.0).square(-1.0, v.1);
    let re = Expr::new()
        .product(1.0, a, z.0)
        .product(-1.0, x.0, y.0)
        .product(-1.0, x.1, y.1);
    let im = Expr::new()
        .product(1.0, a, z.1)
        .product(-1.0, x.0, y.1)
        .product(1.0, x.1, y.0);
    Expr::new()
        .product_of(1.0, minor(b, x), minor(c, y))
        .product_of(-1.0, re.clone(), re)
        .product_of(-1.0, im.clone(), im)
}

fn add_mccormick(p: &mut NlpProblem, name: &str, z: usize, x: usize, y: usize, env: McCormick) {
    for (k, (cx, cy, c0, lower)) in env.planes().into_iter().enumerate() {
        // z - cx x - cy y - c0 (≥ 0 for lower planes, ≤ 0 for upper)
        let e = Expr::var(z).linear(x, -cx).linear(y, -cy).add_const(-c0);
        if lower {
            p.add_ge0(format!("{name}_mc{k}"), e);
        } else {
            p.add_le0(format!("{name}_mc{k}"), e);
        }
    }
}

fn build_lifted(net: &Network, t: f64, scaled: &LoadSet, model: Model) -> Result<Formulation> {
    check_factor(t)?;
    let topo = Topology::new(net)?;
    if model == Model::Qc {
        if let Some(k) = topo.pair_angle.iter().position(|&a| a > FRAC_PI_2) {
            let (a, b) = topo.pairs[k];
            return Err(Error::Formulation(format!(
                "QC needs angle limits within π/2; buses {}-{} allow {}",
                net.buses()[a].id,
                net.buses()[b].id,
                topo.pair_angle[k]
            )));
        }
    }
    let buses = net.buses();
    let mut p = NlpProblem::new(model.as_str(), t, true);
    let mut layout = Layout::default();
    if model == Model::Qc {
        add_polar_voltages(&mut p, net, &mut layout);
    }
    for bus in buses {
        let (lo, hi) = (bus.vmin * bus.vmin, bus.vmax * bus.vmax);
        layout.w.push(p.add_var(format!("w{}", bus.id), lo, hi, clamp_init(1.0, lo, hi)));
    }
    for (k, &(a, b)) in topo.pairs.iter().enumerate() {
        let th = topo.pair_angle[k];
        let (ba, bb) = (&buses[a], &buses[b]);
        let hi = ba.vmax * bb.vmax;
        let lo = ba.vmin * bb.vmin * th.cos().max(0.0);
        let tag = format!("{}_{}", ba.id, bb.id);
        layout.wr.push(p.add_var(format!("wr{tag}"), lo, hi, clamp_init(0.9, lo, hi)));
        let s = hi * th.min(FRAC_PI_2).sin();
        layout.wi.push(p.add_var(format!("wi{tag}"), -s, s, 0.0));
    }
    add_dispatch(&mut p, net, &mut layout);
    let (w, wr, wi) = (layout.w.clone(), layout.wr.clone(), layout.wi.clone());
    add_flows(&mut p, net, &topo, &mut layout, |k| {
        let br = &topo.branches[k];
        let rows = br.flow_w_rows();
        let mut out: [Expr; 4] = Default::default();
        for (j, row) in rows.iter().enumerate() {
            out[j] = Expr::new()
                .linear(w[br.from], row[0])
                .linear(w[br.to], row[1])
                .linear(wr[br.pair], row[2])
                .linear(wi[br.pair], br.sign * row[3]);
        }
        out
    });
    add_balance(&mut p, net, &topo, &layout, t, scaled, |n| Expr::var(w[n]));

    for (k, &(a, b)) in topo.pairs.iter().enumerate() {
        let th = topo.pair_angle[k];
        let (s, c) = th.sin_cos();
        let tag = format!("{}_{}", buses[a].id, buses[b].id);
        p.add_le0(format!("angw_hi{tag}"), Expr::new().linear(wi[k], c).linear(wr[k], -s));
        p.add_le0(format!("angw_lo{tag}"), Expr::new().linear(wi[k], -c).linear(wr[k], -s));
        p.add_le0(
            format!("cone{tag}"),
            Expr::new().square(1.0, wr[k]).square(1.0, wi[k]).product(-1.0, w[a], w[b]),
        );
    }

    if model == Model::Sdp3 {
        for [i, j, k] in triangles(&topo) {
            let pij = topo.pair_index(i, j).expect("triangle edge");
            let pik = topo.pair_index(i, k).expect("triangle edge");
            let pjk = topo.pair_index(j, k).expect("triangle edge");
            let e = determinant_expr(
                [w[i], w[j], w[k]],
                (wr[pij], wi[pij]),
                (wr[pik], wi[pik]),
                (wr[pjk], wi[pjk]),
            );
            p.add_interior_ge0(
                format!("det{}_{}_{}", buses[i].id, buses[j].id, buses[k].id),
                e,
            );
        }
    }

    if model == Model::Qc {
        add_qc_links(&mut p, net, &topo, &mut layout)?;
    }

    p.objective = cost_objective(net, &layout);
    Ok(Formulation {
        model: Some(model),
        problem: p,
        layout,
        topology: topo,
    })
}

fn add_qc_links(p: &mut NlpProblem, net: &Network, topo: &Topology, layout: &mut Layout) -> Result<()> {
    let buses = net.buses();
    let (vm, va, w) = (layout.vm.clone(), layout.va.clone(), layout.w.clone());
    for (n, bus) in buses.iter().enumerate() {
        // W_nn ≥ v², and the secant W_nn ≤ (l + u) v - l u
        p.add_le0(format!("wsq{}", bus.id), Expr::new().square(1.0, vm[n]).linear(w[n], -1.0));
        p.add_le0(
            format!("wsec{}", bus.id),
            Expr::var(w[n])
                .linear(vm[n], -(bus.vmin + bus.vmax))
                .add_const(bus.vmin * bus.vmax),
        );
    }
    add_angle_differences(p, net, topo, layout);
    for (k, &(a, b)) in topo.pairs.iter().enumerate() {
        let env = make_envelopes(topo.pair_angle[k])?;
        let tag = format!("{}_{}", buses[a].id, buses[b].id);
        let cs = p.add_var(format!("cs{tag}"), env.cos_lower, 1.0, 1.0);
        let (slo, shi) = env.sin_bounds();
        let sn = p.add_var(format!("sn{tag}"), slo, shi, 0.0);
        let vmc = McCormick::new(buses[a].vmin, buses[a].vmax, buses[b].vmin, buses[b].vmax);
        let (vlo, vhi) = vmc.product_range();
        let vv = p.add_var(format!("vv{tag}"), vlo, vhi, clamp_init(1.0, vlo, vhi));
        layout.cs.push(cs);
        layout.sn.push(sn);
        layout.vv.push(vv);

        // cos δ ≤ 1 - k δ²  with δ = θ_a - θ_b
        let q = env.cos_quad;
        p.add_le0(
            format!("cosenv{tag}"),
            Expr::var(cs)
                .add_const(-1.0)
                .square(q, va[a])
                .square(q, va[b])
                .product(-2.0 * q, va[a], va[b]),
        );
        let m = env.sin_slope;
        p.add_le0(
            format!("sinenv_hi{tag}"),
            Expr::var(sn).linear(va[a], -m).linear(va[b], m).add_const(-env.sin_offset),
        );
        p.add_ge0(
            format!("sinenv_lo{tag}"),
            Expr::var(sn).linear(va[a], -m).linear(va[b], m).add_const(env.sin_offset),
        );
        add_mccormick(p, &format!("vv{tag}"), vv, vm[a], vm[b], vmc);
        add_mccormick(p, &format!("wr{tag}"), layout.wr[k], vv, cs, McCormick::new(vlo, vhi, env.cos_lower, 1.0));
        add_mccormick(p, &format!("wi{tag}"), layout.wi[k], vv, sn, McCormick::new(vlo, vhi, slo, shi));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minors_of_identity_and_rank_one() {
        let m = triangle_minors([1.0; 3], (0.0, 0.0), (0.0, 0.0), (0.0, 0.0));
        assert!(m.iter().all(|&v| v == 1.0));
        let m = triangle_minors([1.0; 3], (1.0, 0.0), (1.0, 0.0), (1.0, 0.0));
        assert!(m[6].abs() < 1e-15);
    }

    #[test]
    fn determinant_expression_matches_minor() {
        let vars = [0usize, 1, 2];
        let e = determinant_expr(vars, (3, 4), (5, 6), (7, 8));
        let x = [1.1, 0.95, 1.02, 0.9, 0.2, 0.85, -0.1, 0.97, 0.05];
        let m = triangle_minors([x[0], x[1], x[2]], (x[3], x[4]), (x[5], x[6]), (x[7], x[8]));
        assert!((e.value(&x) - x[0] * m[6]).abs() < 1e-14);
    }
}
