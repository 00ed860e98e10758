#![allow(dead_code)]

use std::f64::consts::FRAC_PI_3;

use num_complex::Complex64;
use opfgap::case_io::parse_case;
use opfgap::formulation::{Formulation, Model};
use opfgap::ipm::{solve, SolveOutcome, SolveStatus, SolverOptions};
use opfgap::network::{Branch, Bus, Fuel, Generator, Load, Network};

pub const ONSET_FIXTURE: &str = include_str!("../fixtures/case9_socp_onset.txt");
pub const T1_ORACLE: &str = include_str!("../fixtures/case9_t1_oracle.txt");

pub fn case(name: &str) -> Network {
    parse_case(opfgap::fixtures::by_name(name).expect("bundled case")).expect("parse")
}

pub fn onset() -> f64 {
    ONSET_FIXTURE.trim().parse().expect("onset fixture")
}

pub fn t1_oracle(key: &str) -> f64 {
    T1_ORACLE
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("no {key} in oracle fixture"))
        .parse()
        .expect("oracle value")
}

pub fn build(net: &Network, model: Model, t: f64) -> Formulation {
    model.build(net, t, &net.scalable_loads()).expect("build")
}

pub fn solve_model(net: &Network, model: Model, t: f64) -> (Formulation, SolveOutcome) {
    let f = build(net, model, t);
    let out = solve(&f.problem, &SolverOptions::default()).expect("solve");
    (f, out)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Bisection on SOCP feasibility of the 9-bus case with all loads scaled.
/// Anything but an optimal solve counts as infeasible.
pub fn socp_onset(net: &Network, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    let feasible = |t: f64| solve_model(net, Model::Socp, t).1.status == SolveStatus::Optimal;
    assert!(feasible(lo), "lower end {lo} must be feasible");
    assert!(!feasible(hi), "upper end {hi} must be infeasible");
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

pub const TWO_BUS_R: f64 = 0.01;
pub const TWO_BUS_X: f64 = 0.1;

/// Slack generator at bus 1 (|V| fixed at 1), load `0.5 + 0.1j` at bus 2,
/// one line, wide bounds elsewhere.
pub fn two_bus(load_p: f64, load_q: f64) -> Network {
    let buses = vec![
        Bus {
            id: 1,
            vmin: 1.0,
            vmax: 1.0,
            setpoint_vm: None,
        },
        Bus {
            id: 2,
            vmin: 0.5,
            vmax: 1.5,
            setpoint_vm: None,
        },
    ];
    let branches = vec![Branch {
        id: 1,
        from_bus: 1,
        to_bus: 2,
        r: TWO_BUS_R,
        x: TWO_BUS_X,
        charge_b: 0.0,
        tap: 1.0,
        shift: 0.0,
        s_max: f64::INFINITY,
        angle_max: FRAC_PI_3,
        current_max: None,
    }];
    let gens = vec![Generator::with_default_cost(1, 1, (0.0, 10.0), (-10.0, 10.0), Fuel::Thermal).unwrap()];
    let loads = vec![Load::new(1, 2, load_p, load_q)];
    Network::new(100.0, buses, branches, gens, loads, Vec::new()).expect("two-bus network")
}

/// Brute-force AC-OPF of [`two_bus`]: scan `(|V₂|, θ₂)` for the cheapest
/// point whose bus-2 mismatch is below `tol`, then report the cost at the
/// best-balanced grid point within `0.05` of it. Returns `(cost, |V₂|, θ₂)`.
pub fn two_bus_grid_search(
    net: &Network,
    (vlo, vhi): (f64, f64),
    (alo, ahi): (f64, f64),
    step: f64,
    tol: f64,
) -> Option<(f64, f64, f64)> {
    let y = Complex64::new(1.0, 0.0) / Complex64::new(TWO_BUS_R, TWO_BUS_X);
    let load = Complex64::new(net.loads()[0].p, net.loads()[0].q);
    let gen = &net.generators()[0];
    let v1 = Complex64::new(1.0, 0.0);
    let eval = |vm: f64, va: f64| {
        let v2 = Complex64::from_polar(vm, va);
        let mismatch = (v2 * ((v2 - v1) * y).conj() + load).norm();
        let cost = gen.cost((v1 * ((v1 - v2) * y).conj()).re);
        (mismatch, cost)
    };
    let nv = ((vhi - vlo) / step).round() as usize;
    let na = ((ahi - alo) / step).round() as usize;
    let grid = |i: usize, j: usize| (vlo + i as f64 * step, alo + j as f64 * step);
    let mut cheapest: Option<(f64, usize, usize)> = None;
    for i in 0..=nv {
        for j in 0..=na {
            let (vm, va) = grid(i, j);
            let (mismatch, cost) = eval(vm, va);
            if mismatch <= tol && cheapest.is_none_or(|c| cost < c.0) {
                cheapest = Some((cost, i, j));
            }
        }
    }
    let (_, ci, cj) = cheapest?;
    let reach = (0.05 / step).round() as usize;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for i in ci.saturating_sub(reach)..=(ci + reach).min(nv) {
        for j in cj.saturating_sub(reach)..=(cj + reach).min(na) {
            let (vm, va) = grid(i, j);
            let (mismatch, cost) = eval(vm, va);
            if best.is_none_or(|b| mismatch < b.0) {
                best = Some((mismatch, cost, vm, va));
            }
        }
    }
    best.map(|(_, cost, vm, va)| (cost, vm, va))
}
