use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::network::{branch_admittance, Network};

/// Per-branch electrical data in bus-index space.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchData {
    pub from: usize,
    pub to: usize,
    pub g: f64,
    pub b: f64,
    pub charge_b: f64,
    pub tap: f64,
    pub shift: f64,
    pub s_max: f64,
    pub angle_max: f64,
    pub current_max: Option<f64>,
    /// Index into [`Topology::pairs`].
    pub pair: usize,
    /// `+1` when `from` is the first bus of the pair, `-1` otherwise.
    pub sign: f64,
}

impl BranchData {
    /// `(g/τ², A, B, C, D, -(b + bc/2)/τ², -(b + bc/2))` where the flows are
    /// linear in `(W_ff, W_tt, wr, wi)`.
    fn w_coefficients(&self) -> [f64; 6] {
        let (sp, cp) = self.shift.sin_cos();
        let tau = self.tap;
        [
            (self.g * cp - self.b * sp) / tau,
            (self.g * sp + self.b * cp) / tau,
            (self.g * cp + self.b * sp) / tau,
            (self.g * sp - self.b * cp) / tau,
            -(self.b + 0.5 * self.charge_b),
            self.g,
        ]
    }

    /// Flows `(p_f, q_f, p_t, q_t)` from lifted quantities, with `wr`, `wi`
    /// in from→to orientation.
    pub fn flows_w(&self, wff: f64, wtt: f64, wr: f64, wi: f64) -> [f64; 4] {
        let [a, b, c, d, bsh, g] = self.w_coefficients();
        let t2 = self.tap * self.tap;
        [
            g / t2 * wff - a * wr - b * wi,
            bsh / t2 * wff - a * wi + b * wr,
            g * wtt - c * wr - d * wi,
            bsh * wtt - d * wr + c * wi,
        ]
    }

    /// Linear coefficients of each flow on `(W_ff, W_tt, wr, wi)`.
    pub fn flow_w_rows(&self) -> [[f64; 4]; 4] {
        let [a, b, c, d, bsh, g] = self.w_coefficients();
        let t2 = self.tap * self.tap;
        [
            [g / t2, 0.0, -a, -b],
            [bsh / t2, 0.0, b, -a],
            [0.0, g, -c, -d],
            [0.0, bsh, -d, c],
        ]
    }

    /// Flows from polar voltages.
    pub fn flows_polar(&self, vf: f64, vt: f64, af: f64, at: f64) -> [f64; 4] {
        let d = af - at;
        self.flows_w(vf * vf, vt * vt, vf * vt * d.cos(), vf * vt * d.sin())
    }
}

/// Branch data plus the set of connected bus pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub n_buses: usize,
    pub branches: Vec<BranchData>,
    /// Distinct connected bus pairs `(a, b)` with `a < b`, in order of first
    /// appearance.
    pub pairs: Vec<(usize, usize)>,
    /// Tightest angle limit over the branches of each pair.
    pub pair_angle: Vec<f64>,
}

impl Topology {
    pub fn new(net: &Network) -> Result<Topology> {
        let mut pair_of = BTreeMap::new();
        let mut pairs = Vec::new();
        let mut pair_angle: Vec<f64> = Vec::new();
        let mut branches = Vec::with_capacity(net.branches().len());
        for br in net.branches() {
            let y = branch_admittance(br)?;
            let from = net.bus_index(br.from_bus).expect("validated bus");
            let to = net.bus_index(br.to_bus).expect("validated bus");
            let key = (from.min(to), from.max(to));
            let pair = *pair_of.entry(key).or_insert_with(|| {
                pairs.push(key);
                pair_angle.push(f64::INFINITY);
                pairs.len() - 1
            });
            pair_angle[pair] = pair_angle[pair].min(br.angle_max);
            branches.push(BranchData {
                from,
                to,
                g: y.re,
                b: y.im,
                charge_b: br.charge_b,
                tap: br.tap,
                shift: br.shift,
                s_max: br.s_max,
                angle_max: br.angle_max,
                current_max: br.current_max,
                pair,
                sign: if from == key.0 { 1.0 } else { -1.0 },
            });
        }
        Ok(Topology {
            n_buses: net.buses().len(),
            branches,
            pairs,
            pair_angle,
        })
    }

    /// Index of the pair joining buses `a` and `b`, if connected.
    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.pairs.iter().position(|&p| p == key)
    }
}

/// All 3-cliques `[i, j, k]` (`i < j < k`) of the bus graph.
pub fn triangles(topo: &Topology) -> Vec<[usize; 3]> {
    let mut adj = vec![BTreeSet::new(); topo.n_buses];
    for &(a, b) in &topo.pairs {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut out = Vec::new();
    for i in 0..topo.n_buses {
        for &j in adj[i].range(i + 1..) {
            for &k in adj[j].range(j + 1..) {
                if adj[i].contains(&k) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}
