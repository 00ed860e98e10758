//! Lowering of a [`Network`](crate::network::Network) at a load factor into
//! [`NlpProblem`](crate::nlp::NlpProblem)s: the polar AC-OPF, its QC, SOCP
//! and SDP (2×2 / 3×3 minor) relaxations, and the load-flow recovery problem.

mod ac;
mod common;
mod census;
mod envelope;
mod topology;
mod wspace;

use std::fmt;
use std::str::FromStr;

pub use ac::{build_ac_opf, build_load_flow, evaluate_feasibility, FeasibilityReport};
pub use census::{binding_census, CensusOptions, SolutionView};
pub use envelope::{make_envelopes, McCormick, EnvelopeSet};
pub use topology::{triangles, BranchData, Topology};
pub use wspace::{build_qc, build_sdp, build_socp, triangle_minors};

use crate::error::{Error, Result};
use crate::network::{LoadSet, Network};
use crate::nlp::NlpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    Ac,
    Qc,
    Socp,
    Sdp2,
    Sdp3,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Ac, Model::Qc, Model::Socp, Model::Sdp2, Model::Sdp3];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Ac => "ac",
            Model::Qc => "qc",
            Model::Socp => "socp",
            Model::Sdp2 => "sdp2",
            Model::Sdp3 => "sdp3",
        }
    }

    pub fn is_relaxation(self) -> bool {
        self != Model::Ac
    }

    /// Comma-separated list such as `ac,socp`; `all` selects every model.
    /// Duplicates are dropped and the result is in canonical order.
    pub fn parse_list(s: &str) -> Result<Vec<Model>> {
        let s = s.trim();
        if s == "all" {
            return Ok(Model::ALL.to_vec());
        }
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim) {
            if tok.is_empty() {
                return Err(Error::Scenario(format!("empty model name in '{s}'")));
            }
            out.push(tok.parse::<Model>()?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Builds this formulation.
    pub fn build(self, net: &Network, t: f64, scaled: &LoadSet) -> Result<Formulation> {
        match self {
            Model::Ac => build_ac_opf(net, t, scaled),
            Model::Qc => build_qc(net, t, scaled),
            Model::Socp => build_socp(net, t, scaled),
            Model::Sdp2 => build_sdp(net, t, scaled, 2),
            Model::Sdp3 => build_sdp(net, t, scaled, 3),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ac" => Model::Ac,
            "qc" => Model::Qc,
            "socp" => Model::Socp,
            "sdp2" => Model::Sdp2,
            "sdp3" => Model::Sdp3,
            other => return Err(Error::Scenario(format!("unknown model '{other}'"))),
        })
    }
}

/// Variable indices of a built problem. Vectors that do not apply to a
/// formulation are empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    /// Per bus.
    pub vm: Vec<usize>,
    pub va: Vec<usize>,
    pub w: Vec<usize>,
    /// Per generator.
    pub pg: Vec<usize>,
    pub qg: Vec<usize>,
    /// Per branch.
    pub pf: Vec<usize>,
    pub qf: Vec<usize>,
    pub pt: Vec<usize>,
    pub qt: Vec<usize>,
    /// Per bus pair (see [`Topology::pairs`]).
    pub wr: Vec<usize>,
    pub wi: Vec<usize>,
    pub cs: Vec<usize>,
    pub sn: Vec<usize>,
    pub vv: Vec<usize>,
}

/// A built problem together with the map back to network quantities.
#[derive(Debug, Clone)]
pub struct Formulation {
    /// `None` for the load-flow recovery problem.
    pub model: Option<Model>,
    pub problem: NlpProblem,
    pub layout: Layout,
    pub topology: Topology,
}

/// Polar-space solution.
#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub pf: Vec<f64>,
    pub qf: Vec<f64>,
    pub pt: Vec<f64>,
    pub qt: Vec<f64>,
    pub objective: f64,
}

/// W-space solution. `wr`, `wi` are per branch in from→to orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxSolution {
    pub w: Vec<f64>,
    pub wr: Vec<f64>,
    pub wi: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub pf: Vec<f64>,
    pub qf: Vec<f64>,
    pub pt: Vec<f64>,
    pub qt: Vec<f64>,
    pub objective: f64,
}

fn pick(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

impl Formulation {
    /// Reads the polar solution out of `x`. `None` for pure W-space models.
    pub fn ac_solution(&self, x: &[f64]) -> Option<AcSolution> {
        if self.layout.vm.len() != self.topology.n_buses {
            return None;
        }
        let l = &self.layout;
        Some(AcSolution {
            vm: pick(x, &l.vm),
            va: pick(x, &l.va),
            pg: pick(x, &l.pg),
            qg: pick(x, &l.qg),
            pf: pick(x, &l.pf),
            qf: pick(x, &l.qf),
            pt: pick(x, &l.pt),
            qt: pick(x, &l.qt),
            objective: self.problem.objective_value(x),
        })
    }

    /// Reads the lifted solution out of `x`. `None` for polar-only models.
    pub fn relax_solution(&self, x: &[f64]) -> Option<RelaxSolution> {
        if self.layout.w.len() != self.topology.n_buses {
            return None;
        }
        let l = &self.layout;
        let mut wr = Vec::with_capacity(self.topology.branches.len());
        let mut wi = Vec::with_capacity(self.topology.branches.len());
        for b in &self.topology.branches {
            wr.push(x[l.wr[b.pair]]);
            wi.push(b.sign * x[l.wi[b.pair]]);
        }
        Some(RelaxSolution {
            w: pick(x, &l.w),
            wr,
            wi,
            pg: pick(x, &l.pg),
            qg: pick(x, &l.qg),
            pf: pick(x, &l.pf),
            qf: pick(x, &l.qf),
            pt: pick(x, &l.pt),
            qt: pick(x, &l.qt),
            objective: self.problem.objective_value(x),
        })
    }

    /// Active dispatch at `x`.
    pub fn dispatch(&self, x: &[f64]) -> Vec<f64> {
        pick(x, &self.layout.pg)
    }

    /// Copy of the problem whose initial point is `x` (pushed into bounds
    /// by the solver).
    pub fn with_start(&self, x: &[f64]) -> NlpProblem {
        let mut p = self.problem.clone();
        for (v, &xi) in p.vars.iter_mut().zip(x) {
            v.init = xi;
        }
        p
    }
}
