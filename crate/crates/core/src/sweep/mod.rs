//! Load-scaling sweeps: per-point solves of every requested model, gaps,
//! load-flow recovery, step refinement near transitions and phase labels.

mod phases;

use std::collections::BTreeSet;

use rayon::prelude::*;

pub use phases::{classify_phases, label_point, GrammarViolation, Phase, PhaseInterval, TransitionReport};

use crate::case_io::ScenarioSpec;
use crate::error::{Error, Result};
use crate::formulation::{binding_census, build_load_flow, CensusOptions, Formulation, Model, SolutionView};
use crate::ipm::{solve_logged, IterLog, SolveOutcome, SolveStatus, SolverOptions};
use crate::network::{scale_generation_capacity, LoadSet, Network};

/// `100·(1 - relax/ac)`.
pub fn compute_gap(ac_cost: f64, relax_cost: f64) -> Result<f64> {
    if !(ac_cost > 0.0) {
        return Err(Error::UndefinedGap(ac_cost));
    }
    Ok(100.0 * (1.0 - relax_cost / ac_cost))
}

/// One `(t, model)` row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub t: f64,
    pub model: Model,
    pub status: SolveStatus,
    pub objective: f64,
    /// Relaxation rows with an optimal AC partner at the same `t` only.
    pub gap_pct: Option<f64>,
    pub iterations: usize,
    /// `None` when timing capture is disabled.
    pub solve_time_s: Option<f64>,
    /// Present for optimal rows.
    pub pct_binding_vmag: Option<f64>,
    pub pct_binding_flow: Option<f64>,
    pub recovered_objective: Option<f64>,
    /// `100·(1 - relax/recovered)`.
    pub recovered_gap_pct: Option<f64>,
    /// L2 distance between relaxation and recovered dispatch (p.u.).
    pub recovery_dispatch_distance: Option<f64>,
}

impl SweepRecord {
    /// Infeasibility of a convex relaxation is a proof; for AC it is local.
    pub fn infeasibility_proved(&self) -> bool {
        self.status == SolveStatus::LocallyInfeasible && self.model.is_relaxation()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Worker threads for independent points (at least 1).
    pub workers: usize,
    /// Record wall-clock solve times.
    pub timing: bool,
    pub census: CensusOptions,
    /// Print solver iteration lines to stderr.
    pub log_iterations: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solver: SolverOptions::default(),
            workers: 1,
            timing: true,
            census: CensusOptions::default(),
            log_iterations: false,
        }
    }
}

/// Network with the capacity factor applied and the resolved scaled-load set.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub net: Network,
    pub loads: LoadSet,
}

pub fn prepare(net: &Network, spec: &ScenarioSpec) -> Result<PreparedScenario> {
    spec.validate()?;
    let net = if spec.gen_capacity_factor == 1.0 {
        net.clone()
    } else {
        scale_generation_capacity(net, spec.gen_capacity_factor)?
    };
    let loads = spec.load_selector.resolve(&net)?;
    Ok(PreparedScenario { net, loads })
}

fn solve_formulation(f: &Formulation, opts: &SweepOptions) -> Result<SolveOutcome> {
    let tag = f.problem.meta.tag.clone();
    let t = f.problem.meta.load_factor;
    let mut sink = |l: &IterLog| {
        if opts.log_iterations {
            eprintln!("[{tag} t={t}] {l}");
        }
    };
    solve_logged(&f.problem, &opts.solver, &mut sink)
}

fn census(f: &Formulation, x: &[f64], net: &Network, opts: &CensusOptions) -> (f64, f64) {
    if f.model == Some(Model::Ac) {
        let sol = f.ac_solution(x).expect("polar layout");
        binding_census(net, SolutionView::Ac(&sol), opts)
    } else {
        let sol = f.relax_solution(x).expect("lifted layout");
        binding_census(net, SolutionView::Relax(&sol), opts)
    }
}

/// Result of projecting a relaxation dispatch onto the AC-feasible set.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub outcome: SolveOutcome,
    pub formulation: Formulation,
    pub dispatch: Vec<f64>,
    pub cost: f64,
    pub distance: f64,
}

/// Solves the load-flow recovery problem for `target` (p.u. per generator).
/// A second attempt starts from `warm` when the flat start fails. Without
/// `warm` the AC-OPF optimum at `t` is used instead, if there is one.
pub fn recover(
    prep: &PreparedScenario,
    t: f64,
    target: &[f64],
    warm: Option<&[f64]>,
    opts: &SweepOptions,
) -> Result<Recovery> {
    let f = build_load_flow(&prep.net, t, &prep.loads, target)?;
    let mut outcome = solve_formulation(&f, opts)?;
    if !outcome.status.is_optimal() {
        let fallback = match warm {
            Some(_) => None,
            None => {
                let ac = Model::Ac.build(&prep.net, t, &prep.loads)?;
                Some(solve_formulation(&ac, opts)?).filter(|o| o.status.is_optimal())
            }
        };
        if let Some(x0) = warm.or(fallback.as_ref().map(|o| o.x.as_slice())) {
            let mut g = f.clone();
            g.problem = f.with_start(x0);
            let retry = solve_formulation(&g, opts)?;
            if retry.status.is_optimal() {
                outcome = retry;
            }
        }
    }
    let dispatch = f.dispatch(&outcome.x);
    let cost = prep.net.dispatch_cost(&dispatch);
    let distance = dispatch
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(Recovery {
        outcome,
        formulation: f,
        dispatch,
        cost,
        distance,
    })
}

/// Solves every requested model at `t`.
pub fn run_point(net: &Network, t: f64, spec: &ScenarioSpec, opts: &SweepOptions) -> Result<Vec<SweepRecord>> {
    let prep = prepare(net, spec)?;
    run_prepared_point(&prep, t, spec, opts)
}

pub fn run_prepared_point(
    prep: &PreparedScenario,
    t: f64,
    spec: &ScenarioSpec,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    let mut solved = Vec::new();
    for &model in &spec.models {
        let f = model.build(&prep.net, t, &prep.loads)?;
        let out = solve_formulation(&f, opts)?;
        solved.push((model, f, out));
    }
    let ac = solved
        .iter()
        .find(|(m, _, o)| *m == Model::Ac && o.status.is_optimal())
        .map(|(_, f, o)| (o.objective, o.x.clone(), f.layout.pg.clone()));
    let mut records = Vec::new();
    for (model, f, out) in &solved {
        let optimal = out.status.is_optimal();
        let mut rec = SweepRecord {
            t,
            model: *model,
            status: out.status,
            objective: out.objective,
            gap_pct: None,
            iterations: out.iterations,
            solve_time_s: opts.timing.then_some(out.wall_time),
            pct_binding_vmag: None,
            pct_binding_flow: None,
            recovered_objective: None,
            recovered_gap_pct: None,
            recovery_dispatch_distance: None,
        };
        if optimal {
            let (v, fl) = census(f, &out.x, &prep.net, &opts.census);
            rec.pct_binding_vmag = Some(v);
            rec.pct_binding_flow = Some(fl);
        }
        if model.is_relaxation() && optimal {
            if let Some((ac_obj, _, _)) = &ac {
                rec.gap_pct = compute_gap(*ac_obj, out.objective).ok();
            }
            if spec.recovery_enabled {
                let target = f.dispatch(&out.x);
                let warm = ac.as_ref().map(|(_, x, _)| x.as_slice());
                let r = recover(prep, t, &target, warm, opts)?;
                if r.outcome.status.is_optimal() {
                    rec.recovered_objective = Some(r.cost);
                    rec.recovered_gap_pct = compute_gap(r.cost, out.objective).ok();
                    rec.recovery_dispatch_distance = Some(r.distance);
                }
            }
        }
        records.push(rec);
    }
    Ok(records)
}

fn round_t(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// Base grid `t_start, t_start + step, ...` up to and including `t_end`.
pub fn base_grid(spec: &ScenarioSpec) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let t = round_t(spec.t_start + i as f64 * spec.base_step);
        if t > spec.t_end + 1e-9 {
            break;
        }
        out.push(t);
        i += 1;
    }
    let end = round_t(spec.t_end);
    if out.last().is_none_or(|&l| l < end - 1e-9) {
        out.push(end);
    }
    out
}

fn rows_at(records: &[SweepRecord], t: f64) -> Vec<&SweepRecord> {
    records.iter().filter(|r| r.t == t).collect()
}

/// Consecutive grid points whose statuses differ or whose gap for some
/// model jumps by at least the trigger.
pub fn intervals_to_refine(records: &[SweepRecord], grid: &[f64], trigger: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in grid.windows(2) {
        let (a, b) = (rows_at(records, w[0]), rows_at(records, w[1]));
        let mut hit = false;
        for ra in &a {
            let Some(rb) = b.iter().find(|r| r.model == ra.model) else {
                continue;
            };
            if ra.status != rb.status {
                hit = true;
            }
            if let (Some(ga), Some(gb)) = (ra.gap_pct, rb.gap_pct) {
                if (gb - ga).abs() >= trigger {
                    hit = true;
                }
            }
        }
        if hit {
            out.push((w[0], w[1]));
        }
    }
    out
}

fn evaluate(
    prep: &PreparedScenario,
    ts: &[f64],
    spec: &ScenarioSpec,
    opts: &SweepOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<SweepRecord>> {
    let chunks: Vec<Result<Vec<SweepRecord>>> = pool.install(|| {
        ts.par_iter()
            .map(|&t| run_prepared_point(prep, t, spec, opts))
            .collect()
    });
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Runs the base grid, re-sweeps flagged intervals once at the refinement
/// step, and labels the phases. Records come back sorted by `(t, model)`.
pub fn run_sweep(net: &Network, spec: &ScenarioSpec, opts: &SweepOptions) -> Result<(Vec<SweepRecord>, TransitionReport)> {
    let prep = prepare(net, spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Scenario(format!("cannot start worker pool: {e}")))?;
    let grid = base_grid(spec);
    let mut records = evaluate(&prep, &grid, spec, opts, &pool)?;
    let refined = intervals_to_refine(&records, &grid, spec.refine_trigger);
    let known: BTreeSet<u64> = grid.iter().map(|t| t.to_bits()).collect();
    let mut extra = Vec::new();
    for &(a, b) in &refined {
        let mut j = 1usize;
        loop {
            let t = round_t(a + j as f64 * spec.refine_step);
            if t >= b - 1e-9 {
                break;
            }
            if !known.contains(&t.to_bits()) {
                extra.push(t);
            }
            j += 1;
        }
    }
    extra.sort_by(f64::total_cmp);
    extra.dedup();
    records.extend(evaluate(&prep, &extra, spec, opts, &pool)?);
    records.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.model.cmp(&y.model)));
    let mut report = classify_phases(&records, spec.gap_threshold);
    report.refined = refined;
    Ok((records, report))
}
