//! Power-network data model in per-unit.
//!
//! A [`Network`] is validated once at construction and is immutable
//! afterwards. Scenario mutations ([`scale_generation_capacity`]) return
//! fresh copies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Set of load ids selected for scaling.
pub type LoadSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    /// Voltage magnitude bounds (p.u.).
    pub vmin: f64,
    pub vmax: f64,
    /// Snapshot voltage magnitude (p.u.), when the source data has one.
    pub setpoint_vm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance (p.u.), split evenly between the terminals.
    pub charge_b: f64,
    /// Off-nominal turns ratio at the from side; 1.0 for lines.
    pub tap: f64,
    /// Phase shift (radians); 0.0 for lines.
    pub shift: f64,
    /// Apparent-power limit (p.u.); `f64::INFINITY` when unlimited.
    pub s_max: f64,
    /// Symmetric phase-angle-difference limit (radians).
    pub angle_max: f64,
    /// Current-magnitude limit (p.u.), only when present in the input.
    pub current_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fuel {
    Solar,
    Wind,
    Thermal,
    Hydro,
    Nuclear,
}

impl Fuel {
    /// Renewable and hydro units carry no quadratic cost term.
    pub fn is_linear_cost(self) -> bool {
        matches!(self, Fuel::Solar | Fuel::Wind | Fuel::Hydro)
    }

    /// Default `(c2, c1, c0)` per-unit cost coefficients for generators
    /// whose source data has no cost row.
    pub fn default_cost(self) -> (f64, f64, f64) {
        match self {
            Fuel::Thermal => (0.11, 5.0, 0.0),
            Fuel::Nuclear => (0.02, 1.0, 0.0),
            Fuel::Hydro => (0.0, 0.5, 0.0),
            Fuel::Wind => (0.0, 0.3, 0.0),
            Fuel::Solar => (0.0, 0.2, 0.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fuel::Solar => "solar",
            Fuel::Wind => "wind",
            Fuel::Thermal => "thermal",
            Fuel::Hydro => "hydro",
            Fuel::Nuclear => "nuclear",
        }
    }
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fuel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "solar" => Ok(Fuel::Solar),
            "wind" => Ok(Fuel::Wind),
            "thermal" | "coal" | "ng" | "oil" => Ok(Fuel::Thermal),
            "hydro" => Ok(Fuel::Hydro),
            "nuclear" => Ok(Fuel::Nuclear),
            other => Err(format!("unknown fuel type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub fuel: Fuel,
    pub cost_c2: f64,
    pub cost_c1: f64,
    pub cost_c0: f64,
}

impl Generator {
    /// Generator with fuel-default costs.
    pub fn with_default_cost(
        id: usize,
        bus: usize,
        (pmin, pmax): (f64, f64),
        (qmin, qmax): (f64, f64),
        fuel: Fuel,
    ) -> Result<Self> {
        let (cost_c2, cost_c1, cost_c0) = fuel.default_cost();
        let gen = Generator {
            id,
            bus,
            pmin,
            pmax,
            qmin,
            qmax,
            fuel,
            cost_c2,
            cost_c1,
            cost_c0,
        };
        gen.validate()?;
        Ok(gen)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidGenerator {
                id: self.id,
                reason,
            })
        };
        if !(self.pmin <= self.pmax) {
            return fail(format!("pmin {} > pmax {}", self.pmin, self.pmax));
        }
        if !(self.qmin <= self.qmax) {
            return fail(format!("qmin {} > qmax {}", self.qmin, self.qmax));
        }
        if !(self.cost_c2 >= 0.0) {
            return fail(format!("negative quadratic cost {}", self.cost_c2));
        }
        if self.fuel.is_linear_cost() && self.cost_c2 != 0.0 {
            return fail(format!(
                "{} generator must have zero quadratic cost, got {}",
                self.fuel, self.cost_c2
            ));
        }
        Ok(())
    }

    /// Cost of producing `p` (p.u.); defined outside the dispatch bounds too.
    pub fn cost(&self, p: f64) -> f64 {
        generation_cost(self, p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub id: usize,
    pub bus: usize,
    pub p: f64,
    pub q: f64,
    /// Boundary injection modelled as a negative load; never scaled.
    pub is_injection: bool,
}

impl Load {
    pub fn new(id: usize, bus: usize, p: f64, q: f64) -> Self {
        Load {
            id,
            bus,
            p,
            q,
            is_injection: p < 0.0,
        }
    }

    /// Load multiplier `t^l` for factor `t` and scaling set `scaled`.
    pub fn factor(&self, t: f64, scaled: &LoadSet) -> f64 {
        if !self.is_injection && scaled.contains(&self.id) {
            t
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shunt {
    pub id: usize,
    pub bus: usize,
    pub gs: f64,
    pub bs: f64,
}

/// A validated power network `⟨N, L, G, O⟩` plus shunts, in per-unit on `base_mva`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    loads: Vec<Load>,
    shunts: Vec<Shunt>,
    bus_index: BTreeMap<usize, usize>,
}

impl Network {
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        loads: Vec<Load>,
        shunts: Vec<Shunt>,
    ) -> Result<Self> {
        if !(base_mva > 0.0) || !base_mva.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "base_mva must be positive, got {base_mva}"
            )));
        }
        let mut bus_index = BTreeMap::new();
        for (k, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, k).is_some() {
                return Err(Error::DuplicateId {
                    what: "bus".into(),
                    id: bus.id,
                });
            }
            if !(bus.vmin > 0.0 && bus.vmin <= bus.vmax) {
                return Err(Error::InvalidNetwork(format!(
                    "bus {}: voltage bounds must satisfy 0 < vmin <= vmax, got [{}, {}]",
                    bus.id, bus.vmin, bus.vmax
                )));
            }
        }
        let check_bus = |what: String, bus: usize| -> Result<()> {
            if bus_index.contains_key(&bus) {
                Ok(())
            } else {
                Err(Error::DanglingBus { what, bus })
            }
        };
        let mut seen = BTreeSet::new();
        for br in &branches {
            if !seen.insert(br.id) {
                return Err(Error::DuplicateId {
                    what: "branch".into(),
                    id: br.id,
                });
            }
            check_bus(format!("branch {}", br.id), br.from_bus)?;
            check_bus(format!("branch {}", br.id), br.to_bus)?;
            if br.from_bus == br.to_bus {
                return Err(Error::InvalidNetwork(format!(
                    "branch {} is a self-loop on bus {}",
                    br.id, br.from_bus
                )));
            }
            if br.r * br.r + br.x * br.x <= 0.0 {
                return Err(Error::DegenerateImpedance(br.id));
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {}: tap must be positive, got {}",
                    br.id, br.tap
                )));
            }
            if !(br.s_max >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {}: negative flow limit {}",
                    br.id, br.s_max
                )));
            }
            if !(br.angle_max > 0.0 && br.angle_max <= std::f64::consts::FRAC_PI_2 + 1e-12) {
                return Err(Error::InvalidNetwork(format!(
                    "branch {}: angle limit {} outside (0, pi/2]",
                    br.id, br.angle_max
                )));
            }
        }
        seen.clear();
        for gen in &generators {
            if !seen.insert(gen.id) {
                return Err(Error::DuplicateId {
                    what: "generator".into(),
                    id: gen.id,
                });
            }
            check_bus(format!("generator {}", gen.id), gen.bus)?;
            gen.validate()?;
        }
        seen.clear();
        for load in &loads {
            if !seen.insert(load.id) {
                return Err(Error::DuplicateId {
                    what: "load".into(),
                    id: load.id,
                });
            }
            check_bus(format!("load {}", load.id), load.bus)?;
            if load.p < 0.0 && !load.is_injection {
                return Err(Error::InvalidNetwork(format!(
                    "load {} has negative active power but is not flagged as an injection",
                    load.id
                )));
            }
        }
        seen.clear();
        for sh in &shunts {
            if !seen.insert(sh.id) {
                return Err(Error::DuplicateId {
                    what: "shunt".into(),
                    id: sh.id,
                });
            }
            check_bus(format!("shunt {}", sh.id), sh.bus)?;
        }
        Ok(Network {
            base_mva,
            buses,
            branches,
            generators,
            loads,
            shunts,
            bus_index,
        })
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }
    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }
    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }
    pub fn loads(&self) -> &[Load] {
        &self.loads
    }
    pub fn shunts(&self) -> &[Shunt] {
        &self.shunts
    }

    /// Position of bus `id` in [`Network::buses`].
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Index of the angle-reference bus: the lowest-id bus hosting a
    /// generator, or the lowest-id bus when there are no generators.
    pub fn reference_bus(&self) -> usize {
        let id = self
            .generators
            .iter()
            .map(|g| g.bus)
            .min()
            .or_else(|| self.bus_index.keys().next().copied())
            .expect("network has at least one bus");
        self.bus_index[&id]
    }

    /// Ids of all loads that may be scaled (non-injections).
    pub fn scalable_loads(&self) -> LoadSet {
        self.loads
            .iter()
            .filter(|l| !l.is_injection)
            .map(|l| l.id)
            .collect()
    }

    /// Per-bus complex demand `Σ t^l S^l` for factor `t` (indexed like `buses`).
    pub fn bus_demand(&self, t: f64, scaled: &LoadSet) -> Vec<Complex64> {
        let mut demand = vec![Complex64::new(0.0, 0.0); self.buses.len()];
        for load in &self.loads {
            let k = self.bus_index[&load.bus];
            let f = load.factor(t, scaled);
            demand[k] += Complex64::new(f * load.p, f * load.q);
        }
        demand
    }

    /// Per-bus total shunt admittance `Σ (gs + j bs)` (indexed like `buses`).
    pub fn bus_shunt(&self) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.buses.len()];
        for sh in &self.shunts {
            y[self.bus_index[&sh.bus]] += Complex64::new(sh.gs, sh.bs);
        }
        y
    }

    /// Generator indices grouped by bus index.
    pub fn generators_by_bus(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.buses.len()];
        for (g, gen) in self.generators.iter().enumerate() {
            out[self.bus_index[&gen.bus]].push(g);
        }
        out
    }

    /// Copy with a different generator set (re-validated).
    pub fn with_generators(&self, generators: Vec<Generator>) -> Result<Network> {
        Network::new(
            self.base_mva,
            self.buses.clone(),
            self.branches.clone(),
            generators,
            self.loads.clone(),
            self.shunts.clone(),
        )
    }

    /// Total generation cost of a dispatch (p.u., ordered like `generators`).
    pub fn dispatch_cost(&self, pg: &[f64]) -> f64 {
        self.generators
            .iter()
            .zip(pg)
            .map(|(g, &p)| g.cost(p))
            .sum()
    }
}

/// Series admittance `1 / (r + jx)` of a branch.
pub fn branch_admittance(branch: &Branch) -> Result<Complex64> {
    let den = branch.r * branch.r + branch.x * branch.x;
    if !(den > 0.0) {
        return Err(Error::DegenerateImpedance(branch.id));
    }
    Ok(Complex64::new(branch.r / den, -branch.x / den))
}

/// `c2 p² + c1 p + c0`.
pub fn generation_cost(gen: &Generator, p: f64) -> f64 {
    gen.cost_c2 * p * p + gen.cost_c1 * p + gen.cost_c0
}

/// The `k` scalable loads whose host bus has the lowest setpoint voltage
/// magnitude; ties go to the lower load id.
pub fn select_lowest_voltage_loads(net: &Network, k: usize) -> Result<LoadSet> {
    let mut ranked = Vec::new();
    for load in net.loads().iter().filter(|l| !l.is_injection) {
        let bus = &net.buses()[net.bus_index(load.bus).expect("validated bus")];
        let vm = bus.setpoint_vm.ok_or(Error::MissingSetpoint(bus.id))?;
        ranked.push((vm, load.id));
    }
    if k > ranked.len() {
        return Err(Error::Scenario(format!(
            "requested {k} lowest-voltage loads but only {} scalable loads exist",
            ranked.len()
        )));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, id)| id).collect())
}

/// Copy with every generator's `pmax`, `qmax` (and a negative `qmin`)
/// multiplied by `factor`. `pmin` is left alone.
pub fn scale_generation_capacity(net: &Network, factor: f64) -> Result<Network> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Scenario(format!(
            "generation capacity factor must be positive, got {factor}"
        )));
    }
    let gens = net
        .generators()
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.pmax *= factor;
            g.qmax *= factor;
            if g.qmin < 0.0 {
                g.qmin *= factor;
            }
            g
        })
        .collect();
    net.with_generators(gens)
}
