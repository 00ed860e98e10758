//! Result CSV: one row per `(t, model)`, empty cells for values that do
//! not apply. Numbers use the shortest representation that reads back to
//! the same `f64`.

use crate::error::{Error, Result};
use crate::formulation::Model;
use crate::ipm::SolveStatus;
use crate::sweep::SweepRecord;

pub const RESULTS_HEADER: &str = "t,model,status,objective,gap_pct,iters,solve_time_s,pct_binding_vmag,pct_binding_flow,recovered_objective,recovered_gap_pct,recovery_dispatch_distance";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Status cell: proved infeasibility of a relaxation is written `infeasible`.
fn status_cell(r: &SweepRecord) -> &'static str {
    if r.infeasibility_proved() {
        "infeasible"
    } else {
        r.status.as_str()
    }
}

pub fn write_results(records: &[SweepRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let cells = [
            r.t.to_string(),
            r.model.to_string(),
            status_cell(r).to_string(),
            r.objective.to_string(),
            opt(r.gap_pct),
            r.iterations.to_string(),
            opt(r.solve_time_s),
            opt(r.pct_binding_vmag),
            opt(r.pct_binding_flow),
            opt(r.recovered_objective),
            opt(r.recovered_gap_pct),
            opt(r.recovery_dispatch_distance),
        ];
        out += &cells.join(",");
        out.push('\n');
    }
    out
}

pub fn read_results(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        Some((i, h)) => {
            return Err(Error::Csv {
                line: i + 1,
                msg: format!("unexpected header '{h}'"),
            })
        }
        None => {
            return Err(Error::Csv {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let err = |msg: String| Error::Csv { line: line_no, msg };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 12 {
            return Err(err(format!("expected 12 fields, found {}", cells.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cells[k]
                .parse::<f64>()
                .map_err(|_| err(format!("bad number '{}' in column {}", cells[k], k + 1)))
        };
        let opt_num = |k: usize| -> Result<Option<f64>> {
            if cells[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        let model: Model = cells[1].parse().map_err(|_| err(format!("unknown model '{}'", cells[1])))?;
        let status: SolveStatus = cells[2].parse().map_err(|e: String| err(e))?;
        out.push(SweepRecord {
            t: num(0)?,
            model,
            status,
            objective: num(3)?,
            gap_pct: opt_num(4)?,
            iterations: cells[5]
                .parse()
                .map_err(|_| err(format!("bad iteration count '{}'", cells[5])))?,
            solve_time_s: opt_num(6)?,
            pct_binding_vmag: opt_num(7)?,
            pct_binding_flow: opt_num(8)?,
            recovered_objective: opt_num(9)?,
            recovered_gap_pct: opt_num(10)?,
            recovery_dispatch_distance: opt_num(11)?,
        });
    }
    Ok(out)
}
