mod common;

use common::*;
use opfgap::case_io::{write_results, ScenarioSpec};
use opfgap::formulation::{evaluate_feasibility, Model};
use opfgap::ipm::SolveStatus;
use opfgap::sweep::{
    classify_phases, compute_gap, intervals_to_refine, prepare, recover, run_point, run_sweep, Phase, SweepOptions,
    SweepRecord,
};
use proptest::prelude::*;

fn spec(models: &[Model], t_start: f64, t_end: f64) -> ScenarioSpec {
    ScenarioSpec {
        t_start,
        t_end,
        models: models.to_vec(),
        ..ScenarioSpec::default()
    }
}

fn untimed() -> SweepOptions {
    SweepOptions {
        timing: false,
        ..SweepOptions::default()
    }
}

#[test]
fn unit_load_gap_matches_direct_solves() {
    let net = case("case9");
    let s = spec(&[Model::Ac, Model::Socp], 1.0, 1.0);
    let rows = run_point(&net, 1.0, &s, &untimed()).unwrap();
    assert_eq!(rows.len(), 2);
    let socp = rows.iter().find(|r| r.model == Model::Socp).unwrap();
    let gap = socp.gap_pct.expect("gap against an optimal AC row");
    assert!(gap >= -1e-4);
    assert!(gap <= t1_oracle("socp_gap_pct") + 0.05, "gap {gap}");
    assert!(rel_diff(socp.objective, t1_oracle("socp_objective")) < 1e-6);
    let ac = rows.iter().find(|r| r.model == Model::Ac).unwrap();
    assert!(rel_diff(ac.objective, t1_oracle("ac_objective")) < 1e-6);
}

#[test]
fn huge_load_is_proved_infeasible() {
    let net = case("case9");
    let s = spec(&[Model::Socp], 50.0, 50.0);
    let rows = run_point(&net, 50.0, &s, &untimed()).unwrap();
    assert_eq!(rows[0].status, SolveStatus::LocallyInfeasible);
    assert!(rows[0].infeasibility_proved());
    assert!(write_results(&rows).contains(",socp,infeasible,"));
}

#[test]
fn recovery_of_a_feasible_dispatch_stays_put() {
    let net = case("case9");
    let s = spec(&[Model::Ac], 1.0, 1.0);
    let prep = prepare(&net, &s).unwrap();
    let (f, ac) = solve_model(&net, Model::Ac, 1.0);
    let target = f.dispatch(&ac.x);
    let r = recover(&prep, 1.0, &target, Some(&ac.x), &untimed()).unwrap();
    assert_eq!(r.outcome.status, SolveStatus::Optimal);
    let tol = SweepOptions::default().solver.kkt_tolerance.sqrt();
    assert!(r.distance <= tol, "distance {}", r.distance);
    assert!(rel_diff(r.cost, ac.objective) < tol);
}

#[test]
fn recovered_cost_is_above_the_socp_bound() {
    let net = case("case9");
    let s = spec(&[Model::Socp], 1.0, 1.0);
    let prep = prepare(&net, &s).unwrap();
    let (f, socp) = solve_model(&net, Model::Socp, 1.0);
    let r = recover(&prep, 1.0, &f.dispatch(&socp.x), None, &untimed()).unwrap();
    assert_eq!(r.outcome.status, SolveStatus::Optimal);
    assert!(r.cost >= socp.objective - 1e-6 * (1.0 + socp.objective.abs()));
    let sol = r.formulation.ac_solution(&r.outcome.x).unwrap();
    let rep = evaluate_feasibility(&prep.net, &sol, 1.0, &prep.loads).unwrap();
    assert!(rep.max() <= 1e-6, "{rep:?}");
}

#[test]
fn sweep_past_the_onset_ends_relaxation_infeasible() {
    let net = case("case9");
    let t_star = onset();
    let mut s = spec(&[Model::Ac, Model::Socp], 2.0, t_star + 0.1);
    s.base_step = 0.05;
    s.recovery_enabled = false;
    let (records, report) = run_sweep(&net, &s, &untimed()).unwrap();
    assert_eq!(report.final_phase(), Some(Phase::RelaxInfeasible));
    assert_eq!(report.intervals[0].phase, Phase::Accurate);
    assert!(!report.refined.is_empty());
    let first_bad = report.transitions.last().copied().unwrap();
    assert!(first_bad > t_star - s.refine_step && first_bad < t_star + s.refine_step + 1e-9);
    assert!(records.windows(2).all(|w| (w[0].t, w[0].model) <= (w[1].t, w[1].model)));
}

#[test]
fn worker_count_does_not_change_output() {
    let net = case("case9");
    let mut s = spec(&[Model::Ac, Model::Socp, Model::Qc], 2.1, 2.25);
    s.base_step = 0.05;
    let mut one = untimed();
    one.workers = 1;
    let mut four = untimed();
    four.workers = 4;
    let (a, ra) = run_sweep(&net, &s, &one).unwrap();
    let (b, rb) = run_sweep(&net, &s, &four).unwrap();
    assert_eq!(write_results(&a), write_results(&b));
    assert_eq!(ra, rb);
}

#[test]
fn capacity_factor_and_subset_scaling() {
    let net = case("case9");
    let mut s = spec(&[Model::Ac], 1.0, 1.0);
    s.gen_capacity_factor = 3.0;
    s.load_selector = "lowest_k:1".parse().unwrap();
    let prep = prepare(&net, &s).unwrap();
    assert_eq!(prep.loads.len(), 1);
    for (a, b) in net.generators().iter().zip(prep.net.generators()) {
        assert!(b.pmax >= a.pmax);
    }
    let rows = run_point(&net, 1.5, &s, &untimed()).unwrap();
    assert_eq!(rows[0].status, SolveStatus::Optimal);
}

fn record(t: f64, model: Model, status: SolveStatus, gap: Option<f64>) -> SweepRecord {
    SweepRecord {
        t,
        model,
        status,
        objective: 1.0,
        gap_pct: gap,
        iterations: 1,
        solve_time_s: None,
        pct_binding_vmag: None,
        pct_binding_flow: None,
        recovered_objective: None,
        recovered_gap_pct: None,
        recovery_dispatch_distance: None,
    }
}

fn point() -> impl Strategy<Value = (SolveStatus, SolveStatus, f64)> {
    let status = prop_oneof![
        3 => Just(SolveStatus::Optimal),
        1 => Just(SolveStatus::LocallyInfeasible),
        1 => Just(SolveStatus::IterationLimit),
    ];
    (status.clone(), status, 0.0f64..30.0)
}

fn stream(points: &[(SolveStatus, SolveStatus, f64)]) -> Vec<SweepRecord> {
    let mut out = Vec::new();
    for (i, &(ac, socp, gap)) in points.iter().enumerate() {
        let t = 1.0 + 0.02 * i as f64;
        let g = (ac == SolveStatus::Optimal && socp == SolveStatus::Optimal).then_some(gap);
        out.push(record(t, Model::Ac, ac, None));
        out.push(record(t, Model::Socp, socp, g));
    }
    out
}

proptest! {
    #[test]
    fn phase_intervals_partition_the_points(points in prop::collection::vec(point(), 1..30)) {
        let records = stream(&points);
        let rep = classify_phases(&records, 1.0);
        prop_assert_eq!(rep.labels.len(), points.len());
        let covered: usize = rep
            .intervals
            .iter()
            .map(|iv| rep.labels.iter().filter(|(t, _)| *t >= iv.t_start && *t <= iv.t_end).count())
            .sum();
        prop_assert_eq!(covered, points.len());
        for w in rep.intervals.windows(2) {
            prop_assert!(w[0].phase != w[1].phase);
            prop_assert!(w[0].t_end < w[1].t_start);
        }
        prop_assert_eq!(rep.transitions.len(), rep.intervals.len() - 1);
        for v in &rep.violations {
            prop_assert!(v.to < v.from);
        }
    }

    #[test]
    fn constant_gap_needs_no_refinement(gap in 0.0f64..50.0, n in 2usize..20) {
        let points: Vec<_> = (0..n).map(|_| (SolveStatus::Optimal, SolveStatus::Optimal, gap)).collect();
        let records = stream(&points);
        let grid: Vec<f64> = (0..n).map(|i| 1.0 + 0.02 * i as f64).collect();
        prop_assert!(intervals_to_refine(&records, &grid, 2.0).is_empty());
    }

    #[test]
    fn gap_is_zero_iff_costs_agree(ac in 1.0f64..1e6, frac in 0.0f64..1.0) {
        let relax = ac * frac;
        let g = compute_gap(ac, relax).unwrap();
        prop_assert!((g - 100.0 * (1.0 - frac)).abs() < 1e-9);
        prop_assert!(compute_gap(ac, ac).unwrap().abs() < 1e-12);
        prop_assert!(compute_gap(-ac, relax).is_err());
    }
}
