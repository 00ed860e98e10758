use std::fmt;

use super::SweepRecord;
use crate::ipm::SolveStatus;

/// Regime of the sweep at one load factor. The derived order is the
/// expected order along increasing `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Accurate,
    Bifurcated,
    AcDiverged,
    RelaxInfeasible,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Accurate => "accurate",
            Phase::Bifurcated => "bifurcated",
            Phase::AcDiverged => "ac_diverged",
            Phase::RelaxInfeasible => "relax_infeasible",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInterval {
    pub phase: Phase,
    /// First and last load factor carrying this label.
    pub t_start: f64,
    pub t_end: f64,
}

/// A label change against the expected phase order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrammarViolation {
    pub t: f64,
    pub from: Phase,
    pub to: Phase,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionReport {
    /// Label at every evaluated load factor, ascending in `t`.
    pub labels: Vec<(f64, Phase)>,
    /// Maximal runs of equal labels; they partition the evaluated points.
    pub intervals: Vec<PhaseInterval>,
    /// Load factors at which the label changes (first point of the new run).
    pub transitions: Vec<f64>,
    /// Base-grid intervals re-swept at the refinement step.
    pub refined: Vec<(f64, f64)>,
    pub violations: Vec<GrammarViolation>,
}

impl TransitionReport {
    pub fn final_phase(&self) -> Option<Phase> {
        self.intervals.last().map(|i| i.phase)
    }

    pub fn has_phase(&self, phase: Phase) -> bool {
        self.intervals.iter().any(|i| i.phase == phase)
    }

    /// Plain-text summary.
    pub fn summary(&self) -> String {
        let mut s = String::from("phases:\n");
        for iv in &self.intervals {
            s += &format!("  {:<16} t = {} .. {}\n", iv.phase.as_str(), iv.t_start, iv.t_end);
        }
        if self.transitions.is_empty() {
            s += "transitions: none\n";
        } else {
            let list: Vec<String> = self.transitions.iter().map(|t| t.to_string()).collect();
            s += &format!("transitions: {}\n", list.join(", "));
        }
        if self.refined.is_empty() {
            s += "refined intervals: none\n";
        } else {
            s += "refined intervals:\n";
            for (a, b) in &self.refined {
                s += &format!("  [{a}, {b}]\n");
            }
        }
        if self.violations.is_empty() {
            s += "phase order: ok\n";
        } else {
            s += "phase order violations:\n";
            for v in &self.violations {
                s += &format!("  t = {}: {} after {}\n", v.t, v.to.as_str(), v.from.as_str());
            }
        }
        s
    }
}

/// Label of one load factor from the rows evaluated there.
pub fn label_point(rows: &[&SweepRecord], gap_threshold: f64) -> Phase {
    let relax: Vec<&&SweepRecord> = rows.iter().filter(|r| r.model.is_relaxation()).collect();
    if !relax.is_empty() && relax.iter().all(|r| r.status == SolveStatus::LocallyInfeasible) {
        return Phase::RelaxInfeasible;
    }
    let ac_ok = rows
        .iter()
        .any(|r| !r.model.is_relaxation() && r.status == SolveStatus::Optimal);
    if !ac_ok {
        return Phase::AcDiverged;
    }
    if relax
        .iter()
        .any(|r| r.gap_pct.is_some_and(|g| g >= gap_threshold))
    {
        Phase::Bifurcated
    } else {
        Phase::Accurate
    }
}

/// Labels every load factor and groups the labels into intervals.
/// `records` need not be sorted.
pub fn classify_phases(records: &[SweepRecord], gap_threshold: f64) -> TransitionReport {
    let mut ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut rep = TransitionReport::default();
    for &t in &ts {
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.t == t).collect();
        rep.labels.push((t, label_point(&rows, gap_threshold)));
    }
    for (i, &(t, phase)) in rep.labels.iter().enumerate() {
        match rep.intervals.last_mut() {
            Some(iv) if iv.phase == phase => iv.t_end = t,
            _ => {
                if i > 0 {
                    rep.transitions.push(t);
                    let from = rep.labels[i - 1].1;
                    if phase < from {
                        rep.violations.push(GrammarViolation { t, from, to: phase });
                    }
                }
                rep.intervals.push(PhaseInterval {
                    phase,
                    t_start: t,
                    t_end: t,
                });
            }
        }
    }
    rep
}
