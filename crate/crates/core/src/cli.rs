//! `opfgap` command line: `solve`, `sweep`, `loadflow` and `report`.
//!
//! Exit codes: 0 on success (including solves that do not converge),
//! 2 on usage errors, 3 on invalid or missing inputs. `OPFGAP_LOG`
//! selects stderr verbosity: `quiet`, `info` (default) or `iter`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

// println! that ignores a closed stdout
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = std::io::Write::write_fmt(&mut std::io::stdout().lock(), format_args!("{}\n", format_args!($($arg)*)));
    }};
}

use crate::case_io::{parse_case, parse_scenario, read_results, write_results, LoadSelector, ScenarioSpec};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::formulation::{evaluate_feasibility, CensusOptions, Model};
use crate::ipm::{solve_logged, SolverOptions};
use crate::network::Network;
use crate::report::{emit_plot, Metric, PlotSpec};
use crate::sweep::{prepare, recover, run_sweep, SweepOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "opfgap", version, about = "AC-OPF relaxation gaps under load scaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model at one load factor.
    Solve(SolveArgs),
    /// Sweep the load factor and write the result table.
    Sweep(SweepArgs),
    /// Find the AC-feasible dispatch closest to a given one.
    Loadflow(LoadflowArgs),
    /// Render plots from a result table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    /// Case file path or bundled case name (case9, case14, ...).
    #[arg(long)]
    pub case: String,
    /// Scaled loads: all, lowest-k:K or ids:1,2,...
    #[arg(long)]
    pub loads: Option<String>,
    #[arg(long)]
    pub gen_capacity_factor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// KKT tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = "ac")]
    pub model: String,
    /// Load factor (defaults to the scenario start).
    #[arg(long)]
    pub t: Option<f64>,
    /// Write the optimal dispatch here.
    #[arg(long)]
    pub dispatch: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Scenario file; flags override its values.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Comma-separated models or `all`.
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub refine_step: Option<f64>,
    /// Gap jump (percentage points) that triggers refinement.
    #[arg(long)]
    pub refine_trigger: Option<f64>,
    #[arg(long)]
    pub no_recovery: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value = "opfgap-out")]
    pub out: PathBuf,
    /// Leave solve times empty so repeated runs give identical tables.
    #[arg(long)]
    pub no_timing: bool,
    /// Also render these metrics (comma-separated) into the output directory.
    #[arg(long)]
    pub plot: Option<String>,
    /// Count branches at their current limit instead of their MVA limit
    /// in the flow census.
    #[arg(long)]
    pub census_current_limits: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct LoadflowArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Dispatch file with `gen_id,pg_mw` rows.
    #[arg(long)]
    pub dispatch: PathBuf,
    #[arg(long)]
    pub t: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Comma-separated metrics: cost, gap, recovered_gap, vmag, flow, runtime.
    #[arg(long)]
    pub plot: String,
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogLevel {
    Quiet,
    Info,
    Iter,
}

impl LogLevel {
    pub fn parse(value: Option<&str>) -> std::result::Result<LogLevel, String> {
        match value.map(str::trim) {
            None | Some("") | Some("info") => Ok(LogLevel::Info),
            Some("quiet") => Ok(LogLevel::Quiet),
            Some("iter") => Ok(LogLevel::Iter),
            Some(v) => Err(format!("OPFGAP_LOG must be quiet, info or iter, got '{v}'")),
        }
    }
}

struct Ctx {
    log: LogLevel,
}

impl Ctx {
    fn info(&self, msg: &str) {
        if self.log != LogLevel::Quiet {
            eprintln!("{msg}");
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Reads a case from a path, falling back to the bundled case of that name.
pub fn load_case(spec: &str) -> Result<Network> {
    let path = Path::new(spec);
    if path.exists() {
        return parse_case(&read_file(path)?);
    }
    match fixtures::by_name(spec) {
        Some(text) => parse_case(text),
        None => Err(Error::Io {
            path: spec.to_string(),
            msg: "no such file or bundled case".into(),
        }),
    }
}

fn solver_options(a: &SolverArgs) -> Result<SolverOptions> {
    let mut o = SolverOptions::default();
    if let Some(t) = a.tol {
        o.kkt_tolerance = t;
    }
    if let Some(n) = a.max_iters {
        o.max_iterations = n;
    }
    o.validate().map_err(Error::Scenario)?;
    Ok(o)
}

fn apply_case_flags(spec: &mut ScenarioSpec, a: &CaseArgs) -> Result<()> {
    if let Some(l) = &a.loads {
        spec.load_selector = l.parse::<LoadSelector>()?;
    }
    if let Some(g) = a.gen_capacity_factor {
        spec.gen_capacity_factor = g;
    }
    Ok(())
}

/// Scenario for a sweep: defaults, then the scenario file, then flags.
pub fn scenario_from_args(a: &SweepArgs) -> Result<ScenarioSpec> {
    let mut spec = match &a.scenario {
        Some(p) => parse_scenario(&read_file(p)?)?,
        None => ScenarioSpec::default(),
    };
    apply_case_flags(&mut spec, &a.case)?;
    if let Some(m) = &a.models {
        spec.models = Model::parse_list(m)?;
    }
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut spec.t_start, a.t_start);
    set(&mut spec.t_end, a.t_end);
    set(&mut spec.base_step, a.step);
    set(&mut spec.refine_step, a.refine_step);
    set(&mut spec.refine_trigger, a.refine_trigger);
    if a.no_recovery {
        spec.recovery_enabled = false;
    }
    spec.validate()?;
    Ok(spec)
}

/// Dispatch file: header `gen_id,pg_mw`, one row per generator.
pub fn write_dispatch(net: &Network, pg: &[f64]) -> String {
    let mut s = String::from("gen_id,pg_mw\n");
    for (g, p) in net.generators().iter().zip(pg) {
        let _ = writeln!(s, "{},{}", g.id, p * net.base_mva());
    }
    s
}

/// Parses a dispatch file into p.u. values in generator order.
pub fn read_dispatch(net: &Network, text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "gen_id,pg_mw" => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                msg: "expected header 'gen_id,pg_mw'".into(),
            })
        }
    }
    let gens = net.generators();
    let mut out = vec![None; gens.len()];
    for (i, line) in lines {
        let err = |msg: String| Error::Csv { line: i + 1, msg };
        let (id, p) = line.split_once(',').ok_or_else(|| err(format!("expected 2 fields in '{line}'")))?;
        let id: usize = id.trim().parse().map_err(|_| err(format!("bad generator id '{}'", id.trim())))?;
        let p: f64 = p.trim().parse().map_err(|_| err(format!("bad dispatch '{}'", p.trim())))?;
        let k = gens
            .iter()
            .position(|g| g.id == id)
            .ok_or_else(|| err(format!("unknown generator id {id}")))?;
        if out[k].replace(p / net.base_mva()).is_some() {
            return Err(err(format!("generator {id} listed twice")));
        }
    }
    out.iter()
        .zip(gens)
        .map(|(v, g)| v.ok_or_else(|| Error::Scenario(format!("dispatch file misses generator {}", g.id))))
        .collect()
}

fn cmd_solve(a: &SolveArgs, ctx: &Ctx) -> Result<()> {
    let net = load_case(&a.case.case)?;
    let mut spec = ScenarioSpec::default();
    apply_case_flags(&mut spec, &a.case)?;
    let model: Model = a.model.parse()?;
    let t = a.t.unwrap_or(spec.t_start);
    if !(t > 0.0) {
        return Err(Error::Scenario(format!("load factor must be positive, got {t}")));
    }
    let prep = prepare(&net, &spec)?;
    let opts = solver_options(&a.solver)?;
    let f = model.build(&prep.net, t, &prep.loads)?;
    let iter = ctx.log == LogLevel::Iter;
    let out = solve_logged(&f.problem, &opts, &mut |l| {
        if iter {
            eprintln!("{l}");
        }
    })?;
    out!("model: {model}");
    out!("t: {t}");
    out!("status: {}", out.status);
    out!("objective: {}", out.objective);
    out!("iterations: {}", out.iterations);
    out!("max_violation: {:e}", out.max_violation);
    out!("solve_time_s: {:.3}", out.wall_time);
    if let Some(path) = &a.dispatch {
        write_file(path, &write_dispatch(&prep.net, &f.dispatch(&out.x)))?;
        ctx.info(&format!("dispatch written to {}", path.display()));
    }
    Ok(())
}

fn parse_metrics(s: &str) -> Result<Vec<Metric>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

fn render(records: &[crate::sweep::SweepRecord], metrics: &[Metric], models: &[Model], dir: &Path, ctx: &Ctx) -> Result<()> {
    for &m in metrics {
        let mut ps = PlotSpec::new(m, dir);
        ps.models = models.to_vec();
        if m == Metric::Gap || m == Metric::RecoveredGap {
            ps.models.retain(|x| x.is_relaxation());
        }
        let path = emit_plot(records, &ps)?;
        ctx.info(&format!("plot written to {}", path.display()));
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, ctx: &Ctx) -> Result<()> {
    let net = load_case(&a.case.case)?;
    let spec = scenario_from_args(a)?;
    let metrics = a.plot.as_deref().map(parse_metrics).transpose()?.unwrap_or_default();
    let opts = SweepOptions {
        solver: solver_options(&a.solver)?,
        workers: a.workers.max(1),
        timing: !a.no_timing,
        log_iterations: ctx.log == LogLevel::Iter,
        census: CensusOptions {
            current_limits: a.census_current_limits,
            ..CensusOptions::default()
        },
        ..SweepOptions::default()
    };
    std::fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    ctx.info(&format!(
        "sweeping t = {} .. {} on {} with {}",
        spec.t_start,
        spec.t_end,
        a.case.case,
        spec.models.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",")
    ));
    let (records, report) = run_sweep(&net, &spec, &opts)?;
    let csv = a.out.join("results.csv");
    write_file(&csv, &write_results(&records))?;
    let summary = report.summary();
    write_file(&a.out.join("transitions.txt"), &summary)?;
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), summary.as_bytes());
    ctx.info(&format!("{} rows written to {}", records.len(), csv.display()));
    render(&records, &metrics, &spec.models, &a.out, ctx)
}

fn cmd_loadflow(a: &LoadflowArgs, ctx: &Ctx) -> Result<()> {
    let net = load_case(&a.case.case)?;
    let mut spec = ScenarioSpec::default();
    apply_case_flags(&mut spec, &a.case)?;
    let prep = prepare(&net, &spec)?;
    let target = read_dispatch(&prep.net, &read_file(&a.dispatch)?)?;
    let t = a.t.unwrap_or(spec.t_start);
    let opts = SweepOptions {
        solver: solver_options(&a.solver)?,
        log_iterations: ctx.log == LogLevel::Iter,
        ..SweepOptions::default()
    };
    let r = recover(&prep, t, &target, None, &opts)?;
    out!("status: {}", r.outcome.status);
    out!("dispatch_distance: {}", r.distance);
    out!("cost: {}", r.cost);
    if let Some(sol) = r.formulation.ac_solution(&r.outcome.x) {
        let feas = evaluate_feasibility(&prep.net, &sol, t, &prep.loads)?;
        out!("max_residual: {:e}", feas.max());
    }
    out!("{}", write_dispatch(&prep.net, &r.dispatch).trim_end());
    Ok(())
}

fn cmd_report(a: &ReportArgs, ctx: &Ctx) -> Result<()> {
    let records = read_results(&read_file(&a.csv)?)?;
    let metrics = parse_metrics(&a.plot)?;
    if metrics.is_empty() {
        return Err(Error::Plot("no metric requested".into()));
    }
    let models = match &a.models {
        Some(m) => Model::parse_list(m)?,
        None => Vec::new(),
    };
    std::fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    render(&records, &metrics, &models, &a.out, ctx)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn cli_main(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let log = match LogLevel::parse(std::env::var("OPFGAP_LOG").ok().as_deref()) {
        Ok(l) => l,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let ctx = Ctx { log };
    let res = match &cli.command {
        Command::Solve(a) => cmd_solve(a, &ctx),
        Command::Sweep(a) => cmd_sweep(a, &ctx),
        Command::Loadflow(a) => cmd_loadflow(a, &ctx),
        Command::Report(a) => cmd_report(a, &ctx),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_args(extra: &[&str]) -> SweepArgs {
        let mut v = vec!["opfgap", "sweep", "--case", "case9"];
        v.extend_from_slice(extra);
        match Cli::try_parse_from(v).unwrap().command {
            Command::Sweep(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_come_from_scenario() {
        assert_eq!(scenario_from_args(&sweep_args(&[])).unwrap(), ScenarioSpec::default());
    }

    #[test]
    fn flags_override() {
        let s = scenario_from_args(&sweep_args(&[
            "--models",
            "socp,ac",
            "--t-start",
            "0.8",
            "--t-end",
            "1.2",
            "--loads",
            "lowest-k:2",
            "--no-recovery",
        ]))
        .unwrap();
        assert_eq!(s.models, vec![Model::Ac, Model::Socp]);
        assert_eq!((s.t_start, s.t_end), (0.8, 1.2));
        assert_eq!(s.load_selector, LoadSelector::LowestK(2));
        assert!(!s.recovery_enabled);
    }

    #[test]
    fn log_levels() {
        assert_eq!(LogLevel::parse(None), Ok(LogLevel::Info));
        assert_eq!(LogLevel::parse(Some("iter")), Ok(LogLevel::Iter));
        assert!(LogLevel::parse(Some("loud")).is_err());
    }

    #[test]
    fn dispatch_round_trip() {
        let net = load_case("case9").unwrap();
        let pg = [0.9, 1.3, 0.95];
        let back = read_dispatch(&net, &write_dispatch(&net, &pg)).unwrap();
        for (a, b) in pg.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(read_dispatch(&net, "gen_id,pg_mw\n1,90\n").is_err());
        assert!(read_dispatch(&net, "gen_id,pg_mw\n7,90\n").is_err());
    }

    #[test]
    fn usage_and_input_codes() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(cli_main(s(&["opfgap", "frobnicate"])), EXIT_USAGE);
        assert_eq!(cli_main(s(&["opfgap", "solve", "--case", "case9", "--bogus"])), EXIT_USAGE);
        assert_eq!(cli_main(s(&["opfgap", "solve", "--case", "/no/such/case.m"])), EXIT_INPUT);
        assert_eq!(cli_main(s(&["opfgap", "solve", "--case", "case9", "--model", "dc"])), EXIT_INPUT);
    }
}
