mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use opfgap::case_io::{parse_case, write_case, write_results, ScenarioSpec};
use opfgap::formulation::{build_sdp, build_socp, evaluate_feasibility, make_envelopes, Formulation, Model};
use opfgap::ipm::{check_derivatives, solve, SolveOutcome, SolveStatus, SolverOptions};
use opfgap::sweep::{compute_gap, prepare, recover, run_sweep, Phase, SweepOptions};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

type Outcome = Result<String, String>;

const LOAD_FACTORS: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

struct Point {
    case: &'static str,
    t: f64,
    ac: Option<(Formulation, SolveOutcome)>,
    relax: Vec<(Model, Formulation, SolveOutcome)>,
}

impl Point {
    fn label(&self) -> String {
        format!("{} t={}", self.case, self.t)
    }

    fn objective(&self, model: Model) -> Option<f64> {
        self.relax
            .iter()
            .find(|(m, _, o)| *m == model && o.status == SolveStatus::Optimal)
            .map(|(_, _, o)| o.objective)
    }
}

fn lower_bound_points() -> Vec<Point> {
    let mut out = Vec::new();
    for case_name in ["case9", "case14"] {
        let net = case(case_name);
        for t in LOAD_FACTORS {
            let (f, o) = solve_model(&net, Model::Ac, t);
            let ac = (o.status == SolveStatus::Optimal).then_some((f, o));
            let relax = [Model::Qc, Model::Socp, Model::Sdp2, Model::Sdp3]
                .into_iter()
                .map(|m| {
                    let (f, o) = solve_model(&net, m, t);
                    (m, f, o)
                })
                .collect();
            out.push(Point {
                case: case_name,
                t,
                ac,
                relax,
            });
        }
    }
    out
}

fn tol(v: f64) -> f64 {
    1e-6 * (1.0 + v.abs())
}

fn criterion_1() -> Outcome {
    let pairs = [(3366.49, 2356.95, 29.99), (3499.93, 2371.02, 32.26)];
    let mut got = Vec::new();
    for (ac, relax, want) in pairs {
        let g = compute_gap(ac, relax).map_err(|e| e.to_string())?;
        if (g - want).abs() > 0.01 {
            return Err(format!("gap({ac}, {relax}) = {g:.4}, expected {want}"));
        }
        got.push(format!("{g:.2}"));
    }
    Ok(got.join(", "))
}

fn criterion_2(points: &[Point]) -> Outcome {
    let mut checked = 0;
    for p in points {
        let Some((_, ac)) = &p.ac else {
            return Err(format!("AC did not converge at {}", p.label()));
        };
        for (m, _, o) in &p.relax {
            if o.status != SolveStatus::Optimal {
                continue;
            }
            if o.objective > ac.objective + tol(ac.objective) {
                return Err(format!("{m} {} above AC {} at {}", o.objective, ac.objective, p.label()));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} relaxation objectives below AC on {} points", points.len()))
}

fn criterion_3(points: &[Point]) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in points {
        let (Some(a), Some(b)) = (p.objective(Model::Sdp2), p.objective(Model::Socp)) else {
            return Err(format!("sdp2 or socp not optimal at {}", p.label()));
        };
        let d = (a - b).abs() / b.abs().max(1.0);
        if d > 1e-5 {
            return Err(format!("sdp2 {a} vs socp {b} at {}", p.label()));
        }
        worst = worst.max(d);
        let net = case(p.case);
        let loads = net.scalable_loads();
        let s = build_socp(&net, p.t, &loads).map_err(|e| e.to_string())?;
        let d2 = build_sdp(&net, p.t, &loads, 2).map_err(|e| e.to_string())?;
        if s.problem.constraints != d2.problem.constraints || s.problem.vars != d2.problem.vars {
            return Err(format!("constraint sets differ at {}", p.label()));
        }
    }
    Ok(format!("max relative difference {worst:.1e}, constraint sets identical"))
}

fn criterion_4(points: &[Point]) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in points {
        let socp = p.objective(Model::Socp).ok_or_else(|| format!("socp not optimal at {}", p.label()))?;
        let qc = p.objective(Model::Qc).ok_or_else(|| format!("qc not optimal at {}", p.label()))?;
        let sdp3 = p.objective(Model::Sdp3).ok_or_else(|| format!("sdp3 not optimal at {}", p.label()))?;
        if qc < socp - tol(socp) {
            return Err(format!("qc {qc} below socp {socp} at {}", p.label()));
        }
        let rel = (qc - socp).abs() / socp.abs();
        if rel > 5e-3 {
            return Err(format!("qc {qc} more than 0.5% from socp {socp} at {}", p.label()));
        }
        if sdp3 < socp - tol(socp) {
            return Err(format!("sdp3 {sdp3} below socp {socp} at {}", p.label()));
        }
        worst = worst.max(rel);
    }
    Ok(format!("qc >= socp, sdp3 >= socp, max |qc - socp| = {:.3}%", 100.0 * worst))
}

fn criterion_5() -> Outcome {
    let net = case("case9");
    let t_star = onset();
    let spec = ScenarioSpec {
        t_start: 0.8,
        t_end: t_star + 0.1,
        ..ScenarioSpec::default()
    };
    let opts = SweepOptions {
        timing: false,
        ..SweepOptions::default()
    };
    let start = Instant::now();
    let (records, report) = run_sweep(&net, &spec, &opts).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    if secs > 600.0 {
        return Err(format!("sweep took {secs:.0} s"));
    }
    if report.final_phase() != Some(Phase::RelaxInfeasible) {
        return Err(format!("final phase {:?}\n{}", report.final_phase(), report.summary()));
    }
    let first = report.intervals.first().ok_or("no intervals")?;
    if first.phase != Phase::Accurate {
        return Err(format!("first phase {}\n{}", first.phase, report.summary()));
    }
    let ac_fails_early = records
        .iter()
        .any(|r| r.model == Model::Ac && r.t <= t_star && r.status != SolveStatus::Optimal);
    let note = if ac_fails_early {
        "AC fails before t*".to_string()
    } else {
        let last_ac = records
            .iter()
            .filter(|r| r.model == Model::Ac && r.status == SolveStatus::Optimal)
            .map(|r| r.t)
            .fold(f64::NAN, f64::max);
        format!("AC solvable up to t*={t_star} (last optimal t={last_ac}), endpoints only")
    };
    let phases: Vec<&str> = report.intervals.iter().map(|iv| iv.phase.as_str()).collect();
    Ok(format!("{} in {secs:.1} s; {note}", phases.join(" -> ")))
}

fn criterion_6(points: &[Point]) -> Outcome {
    let opts = SweepOptions {
        timing: false,
        ..SweepOptions::default()
    };
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for p in points {
        let net = case(p.case);
        let spec = ScenarioSpec::default();
        let prep = prepare(&net, &spec).map_err(|e| e.to_string())?;
        let warm = p.ac.as_ref().map(|(_, o)| o.x.as_slice());
        for (m, f, o) in &p.relax {
            if o.status != SolveStatus::Optimal {
                continue;
            }
            let r = recover(&prep, p.t, &f.dispatch(&o.x), warm, &opts).map_err(|e| e.to_string())?;
            if r.outcome.status != SolveStatus::Optimal {
                return Err(format!("{m} recovery {} at {}", r.outcome.status, p.label()));
            }
            let sol = r.formulation.ac_solution(&r.outcome.x).ok_or("recovery has no polar solution")?;
            let res = evaluate_feasibility(&prep.net, &sol, p.t, &prep.loads)
                .map_err(|e| e.to_string())?
                .max();
            if res > 1e-6 {
                return Err(format!("{m} recovery residual {res:e} at {}", p.label()));
            }
            if r.cost < o.objective - tol(o.objective) {
                return Err(format!("{m} recovered cost {} below bound {} at {}", r.cost, o.objective, p.label()));
            }
            worst = worst.max(res);
            count += 1;
        }
    }
    Ok(format!("{count} recoveries, max residual {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let net = case("case9");
    let f = build(&net, Model::Ac, 1.0);
    let n = f.problem.num_vars();
    let m = f.problem.constraints.len();
    let mut runner = TestRunner::deterministic();
    let frac = proptest::collection::vec(0.05f64..0.95, n);
    let mult = proptest::collection::vec(-2.0f64..2.0, m);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let s = frac.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let lambda = mult.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let x: Vec<f64> = f
            .problem
            .vars
            .iter()
            .zip(&s)
            .map(|(v, &s)| v.lower + s * (v.upper - v.lower))
            .collect();
        let rep = check_derivatives(&f.problem, &x, &lambda);
        if !rep.passes(1e-5) {
            return Err(format!("derivative check {rep:?}"));
        }
        worst = worst.max(rep.first_order).max(rep.second_order);
    }
    let two = two_bus(0.5, 0.1);
    let (_, out) = solve_model(&two, Model::Ac, 1.0);
    if out.status != SolveStatus::Optimal {
        return Err(format!("2-bus solve {}", out.status));
    }
    let (grid, _, _) =
        two_bus_grid_search(&two, (0.9, 1.1), (-0.2, 0.1), 1e-4, 2e-3).ok_or("grid search found no point")?;
    let rel = rel_diff(out.objective, grid);
    if rel > 1e-3 {
        return Err(format!("2-bus objective {} vs grid {grid}", out.objective));
    }
    Ok(format!("max derivative error {worst:.1e}; 2-bus {:.6} vs grid {grid:.6}", out.objective))
}

fn criterion_8() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let mut worst = f64::INFINITY;
    for tb in [
        std::f64::consts::PI / 12.0,
        std::f64::consts::FRAC_PI_6,
        std::f64::consts::FRAC_PI_4,
        5.0 * std::f64::consts::PI / 12.0,
    ] {
        let env = make_envelopes(tb).map_err(|e| e.to_string())?;
        let sample = -tb..=tb;
        for _ in 0..1000 {
            let th = sample.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
            let slack = [
                env.cos_upper(th) - th.cos(),
                th.cos() - env.cos_lower,
                env.sin_upper(th) - th.sin(),
                th.sin() - env.sin_lower(th),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            if slack < -1e-9 {
                return Err(format!("θ̄={tb}, θ={th}: slack {slack:e}"));
            }
            worst = worst.min(slack);
        }
    }
    Ok(format!("4000 samples, min slack {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let net = case("case9");
    let f = build(&net, Model::Socp, 1.0);
    let mut objs = Vec::new();
    for s in [None, Some(0.2), Some(0.8)] {
        let x0: Vec<f64> = f
            .problem
            .vars
            .iter()
            .map(|v| match s {
                Some(s) if v.lower.is_finite() && v.upper.is_finite() => v.lower + s * (v.upper - v.lower),
                _ => v.init,
            })
            .collect();
        let out = solve(&f.with_start(&x0), &SolverOptions::default()).map_err(|e| e.to_string())?;
        if out.status != SolveStatus::Optimal {
            return Err(format!("start {s:?}: {}", out.status));
        }
        objs.push(out.objective);
    }
    let spread = objs.iter().map(|o| rel_diff(*o, objs[0])).fold(0.0, f64::max);
    if spread > 1e-6 {
        return Err(format!("objectives {objs:?}"));
    }
    Ok(format!("3 starts, relative spread {spread:.1e}"))
}

fn criterion_10() -> Outcome {
    for (name, text) in opfgap::fixtures::ALL {
        let net = parse_case(text).map_err(|e| format!("{name}: {e}"))?;
        let first = write_case(&net);
        let back = parse_case(&first).map_err(|e| format!("{name}: {e}"))?;
        if back != net {
            return Err(format!("{name}: parse/write changed the network"));
        }
        let second = write_case(&back);
        let third = write_case(&parse_case(&second).map_err(|e| format!("{name}: {e}"))?);
        if first != second || second != third {
            return Err(format!("{name}: serialization not stable"));
        }
    }
    Ok(format!("{} fixtures", opfgap::fixtures::ALL.len()))
}

fn criterion_11() -> Outcome {
    let net = case("case9");
    let spec = ScenarioSpec {
        t_start: 1.9,
        t_end: 2.3,
        ..ScenarioSpec::default()
    };
    let run = |workers| {
        let opts = SweepOptions {
            timing: false,
            workers,
            ..SweepOptions::default()
        };
        run_sweep(&net, &spec, &opts).map(|(r, _)| write_results(&r))
    };
    let a = run(1).map_err(|e| e.to_string())?;
    let b = run(4).map_err(|e| e.to_string())?;
    if a != b {
        return Err("CSV differs between 1 and 4 workers".into());
    }
    Ok(format!("{} identical rows", a.lines().count() - 1))
}

fn report(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(detail) => {
            println!("criterion {n:>2} PASS {name} ({secs:.1} s): {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {n:>2} FAIL {name} ({secs:.1} s): {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    println!("\nrunning acceptance criteria");
    let started = Instant::now();
    let points = lower_bound_points();
    let results = [
        report(1, "gap formula", criterion_1),
        report(2, "lower bounds", || criterion_2(&points)),
        report(3, "sdp2 equals socp", || criterion_3(&points)),
        report(4, "relaxation ordering", || criterion_4(&points)),
        report(5, "phase sequence", criterion_5),
        report(6, "load-flow recovery", || criterion_6(&points)),
        report(7, "solver verification", criterion_7),
        report(8, "envelope soundness", criterion_8),
        report(9, "convex determinism", criterion_9),
        report(10, "parser round trip", criterion_10),
        report(11, "sweep determinism", criterion_11),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!(
        "acceptance: {passed} of {} criteria passed in {:.1} s",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
