use crate::network::Network;

use super::topology::Topology;
use super::{AcSolution, RelaxSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    /// Absolute distance (p.u.) to a voltage bound that counts as binding.
    pub vmag_eps: f64,
    /// Relative distance to a flow limit that counts as binding.
    pub flow_eps: f64,
    /// Count current limits (`|S|/|V|` against `current_max`) instead of
    /// apparent-power limits.
    pub current_limits: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            vmag_eps: 1e-4,
            flow_eps: 1e-3,
            current_limits: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SolutionView<'a> {
    Ac(&'a AcSolution),
    Relax(&'a RelaxSolution),
}

impl<'a> From<&'a AcSolution> for SolutionView<'a> {
    fn from(s: &'a AcSolution) -> Self {
        SolutionView::Ac(s)
    }
}

impl<'a> From<&'a RelaxSolution> for SolutionView<'a> {
    fn from(s: &'a RelaxSolution) -> Self {
        SolutionView::Relax(s)
    }
}

impl SolutionView<'_> {
    fn vm(&self, n: usize) -> f64 {
        match self {
            SolutionView::Ac(s) => s.vm[n],
            SolutionView::Relax(s) => s.w[n].max(0.0).sqrt(),
        }
    }

    fn flows(&self, k: usize) -> [f64; 4] {
        match self {
            SolutionView::Ac(s) => [s.pf[k], s.qf[k], s.pt[k], s.qt[k]],
            SolutionView::Relax(s) => [s.pf[k], s.qf[k], s.pt[k], s.qt[k]],
        }
    }
}

/// `(pct_binding_vmag, pct_binding_flow)`. The flow percentage is taken
/// over branches that carry the relevant limit; it is 0 when none do.
pub fn binding_census(net: &Network, sol: SolutionView<'_>, opts: &CensusOptions) -> (f64, f64) {
    let buses = net.buses();
    let binding_v = buses
        .iter()
        .enumerate()
        .filter(|(n, b)| {
            let v = sol.vm(*n);
            v <= b.vmin + opts.vmag_eps || v >= b.vmax - opts.vmag_eps
        })
        .count();
    let pct_v = if buses.is_empty() {
        0.0
    } else {
        100.0 * binding_v as f64 / buses.len() as f64
    };

    let Ok(topo) = Topology::new(net) else {
        return (pct_v, 0.0);
    };
    let mut limited = 0usize;
    let mut binding = 0usize;
    for (k, br) in topo.branches.iter().enumerate() {
        let [pf, qf, pt, qt] = sol.flows(k);
        let (load, limit) = if opts.current_limits {
            let Some(imax) = br.current_max else { continue };
            let i_f = pf.hypot(qf) / sol.vm(br.from).max(1e-9);
            let i_t = pt.hypot(qt) / sol.vm(br.to).max(1e-9);
            (i_f.max(i_t), imax)
        } else {
            if !br.s_max.is_finite() {
                continue;
            }
            (pf.hypot(qf).max(pt.hypot(qt)), br.s_max)
        };
        limited += 1;
        if load >= limit - opts.flow_eps * limit {
            binding += 1;
        }
    }
    let pct_f = if limited == 0 {
        0.0
    } else {
        100.0 * binding as f64 / limited as f64
    };
    (pct_v, pct_f)
}
