//! Sweep scenario files: whitespace- or newline-separated `key=value`
//! pairs, `#` comments. Unknown keys are rejected.
//!
//! ```text
//! t_start=1.2 t_end=2.05
//! loads=lowest_k:5        # all | lowest_k:K | ids:1,4,7
//! models=ac,qc,socp,sdp3
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formulation::Model;
use crate::network::{select_lowest_voltage_loads, LoadSet, Network};

pub const DEFAULT_BASE_STEP: f64 = 0.02;
pub const DEFAULT_REFINE_STEP: f64 = 0.005;
pub const DEFAULT_REFINE_TRIGGER: f64 = 2.0;
pub const DEFAULT_GAP_THRESHOLD: f64 = 1.0;

/// Which loads belong to the scaled set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadSelector {
    All,
    LowestK(usize),
    Ids(Vec<usize>),
}

impl LoadSelector {
    pub fn resolve(&self, net: &Network) -> Result<LoadSet> {
        match self {
            LoadSelector::All => Ok(net.scalable_loads()),
            LoadSelector::LowestK(k) => select_lowest_voltage_loads(net, *k),
            LoadSelector::Ids(ids) => {
                let known = net.scalable_loads();
                for id in ids {
                    if !known.contains(id) {
                        return Err(Error::Scenario(format!(
                            "load id {id} is not a scalable load of this network"
                        )));
                    }
                }
                Ok(ids.iter().copied().collect())
            }
        }
    }
}

impl FromStr for LoadSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(LoadSelector::All);
        }
        if let Some(k) = s
            .strip_prefix("lowest_k:")
            .or_else(|| s.strip_prefix("lowest-k:"))
        {
            let k = k
                .parse()
                .map_err(|_| Error::Scenario(format!("bad load count in '{s}'")))?;
            return Ok(LoadSelector::LowestK(k));
        }
        if let Some(ids) = s.strip_prefix("ids:") {
            let ids = ids
                .split(',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Scenario(format!("bad load id '{t}'")))
                })
                .collect::<Result<Vec<usize>>>()?;
            return Ok(LoadSelector::Ids(ids));
        }
        Err(Error::Scenario(format!(
            "bad load selector '{s}' (expected all, lowest_k:K or ids:...)"
        )))
    }
}

impl fmt::Display for LoadSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadSelector::All => f.write_str("all"),
            LoadSelector::LowestK(k) => write!(f, "lowest_k:{k}"),
            LoadSelector::Ids(ids) => {
                let s: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                write!(f, "ids:{}", s.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub base_step: f64,
    pub refine_step: f64,
    /// Gap jump (percentage points) between neighbouring grid points that
    /// triggers a finer re-sweep of that interval.
    pub refine_trigger: f64,
    pub load_selector: LoadSelector,
    pub models: Vec<Model>,
    pub gen_capacity_factor: f64,
    pub recovery_enabled: bool,
    /// Gap (percentage points) at or above which a point counts as bifurcated.
    pub gap_threshold: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            t_start: 1.0,
            t_end: 1.0,
            base_step: DEFAULT_BASE_STEP,
            refine_step: DEFAULT_REFINE_STEP,
            refine_trigger: DEFAULT_REFINE_TRIGGER,
            load_selector: LoadSelector::All,
            models: Model::ALL.to_vec(),
            gen_capacity_factor: 1.0,
            recovery_enabled: true,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if !(self.t_start > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_start must be positive, got {}", self.t_start));
        }
        if !(self.t_start <= self.t_end) {
            return bad(format!(
                "t_start {} exceeds t_end {}",
                self.t_start, self.t_end
            ));
        }
        if !(self.refine_step > 0.0 && self.refine_step <= self.base_step) {
            return bad(format!(
                "need 0 < refine_step <= base_step, got {} and {}",
                self.refine_step, self.base_step
            ));
        }
        if self.models.is_empty() {
            return bad("models must not be empty".into());
        }
        if !(self.gen_capacity_factor > 0.0) {
            return bad(format!(
                "gen_capacity_factor must be positive, got {}",
                self.gen_capacity_factor
            ));
        }
        if !(self.refine_trigger > 0.0) || !(self.gap_threshold > 0.0) {
            return bad("refine_trigger and gap_threshold must be positive".into());
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Scenario(format!("non-numeric value '{v}' for key '{key}'")))
        };
        match key {
            "t_start" => self.t_start = num(value)?,
            "t_end" => self.t_end = num(value)?,
            "base_step" | "step" => self.base_step = num(value)?,
            "refine_step" => self.refine_step = num(value)?,
            "refine_trigger" => self.refine_trigger = num(value)?,
            "gen_capacity_factor" => self.gen_capacity_factor = num(value)?,
            "gap_threshold" => self.gap_threshold = num(value)?,
            "loads" => self.load_selector = value.parse()?,
            "models" => self.models = Model::parse_list(value)?,
            "recovery_enabled" | "recovery" => {
                self.recovery_enabled = match value {
                    "true" | "1" | "yes" | "on" => true,
                    "false" | "0" | "no" | "off" => false,
                    _ => {
                        return Err(Error::Scenario(format!(
                            "non-boolean value '{value}' for key '{key}'"
                        )))
                    }
                }
            }
            _ => return Err(Error::Scenario(format!("unknown key '{key}'"))),
        }
        Ok(())
    }
}

/// Parses a scenario file; absent keys take their defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::default();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::Scenario(format!("expected key=value, got '{tok}'")))?;
            spec.set(key.trim(), value.trim())?;
        }
    }
    spec.validate()?;
    Ok(spec)
}
