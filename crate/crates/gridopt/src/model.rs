//! Electrical network data model: buses, branches, generators, loads, the
//! tap-changing series regulator, and the virtual-breaker registry.
//!
//! A network is described by a JSON file (see `load_network`). Field names
//! carry explicit units (`nominal_kv`, `r_ohm`, `imax_a`) so fixtures are
//! diffable and unambiguous. A loaded [`NetworkModel`] is validated once and
//! immutable afterwards; it can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    #[serde(rename = "HV")]
    Hv,
    #[serde(rename = "MV")]
    Mv,
}

/// A substation bar. HV buses act as ideal slacks holding nominal voltage;
/// MV buses carry loads and generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    pub nominal_kv: f64,
    #[serde(default = "default_vmin_frac")]
    pub vmin_frac: f64,
    #[serde(default = "default_vmax_frac")]
    pub vmax_frac: f64,
}

fn default_vmin_frac() -> f64 {
    0.9
}

fn default_vmax_frac() -> f64 {
    1.1
}

/// A series line segment. `breaker` names the virtual breaker (a series pair
/// of physical switches on this segment) that can open it; segments without
/// one are permanently conducting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub imax_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaker: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub phase_controllable: bool,
    /// Power-factor angle range in radians, used only when controllable.
    #[serde(default)]
    pub phase_range_rad: (f64, f64),
    #[serde(default)]
    pub fixed_phase_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: String,
    pub bus: String,
}

/// Series voltage regulator: shifts the downstream voltage magnitude by
/// `n_tap * delta_v_kv` on its branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tvr {
    pub branch: String,
    #[serde(default = "default_delta_v")]
    pub delta_v_kv: f64,
    #[serde(default = "default_tap_set")]
    pub tap_set: Vec<i32>,
    #[serde(default = "default_nominal_v_in")]
    pub nominal_v_in_kv: f64,
}

fn default_delta_v() -> f64 {
    0.1
}

fn default_tap_set() -> Vec<i32> {
    vec![-3, -2, -1, 0, 1, 2, 3]
}

fn default_nominal_v_in() -> f64 {
    8.4
}

/// Output voltage of the regulator for a given input voltage and tap.
pub fn tvr_output_kv(v_in_kv: f64, n_tap: i32, delta_v_kv: f64) -> f64 {
    v_in_kv + n_tap as f64 * delta_v_kv
}

/// One reconfigurable connection: two physical switches in series on a
/// branch, operated together as a single breaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualBreaker {
    pub id: String,
    pub switches: (String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tvr: Option<Tvr>,
    #[serde(default)]
    pub virtual_breakers: Vec<VirtualBreaker>,
}

impl NetworkModel {
    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn hv_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.kind == BusKind::Hv)
    }

    pub fn mv_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.kind == BusKind::Mv)
    }

    /// Generators whose phase angle is a free parameter, in file order.
    /// Their order defines the layout of the phase genome.
    pub fn controllable_generators(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter().filter(|g| g.phase_controllable)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut bus_ids = BTreeSet::new();
        for bus in &self.buses {
            if !bus_ids.insert(bus.id.as_str()) {
                return Err(invalid(format!("duplicate bus id {:?}", bus.id)));
            }
            if bus.nominal_kv <= 0.0 {
                return Err(invalid(format!(
                    "bus {:?}: nominal_kv must be positive",
                    bus.id
                )));
            }
            if !(bus.vmin_frac > 0.0 && bus.vmin_frac < 1.0 && bus.vmax_frac > 1.0) {
                return Err(invalid(format!(
                    "bus {:?}: voltage band must satisfy 0 < vmin_frac < 1 < vmax_frac",
                    bus.id
                )));
            }
        }
        if self.hv_buses().next().is_none() {
            return Err(invalid("network has no HV bus"));
        }

        let mut breaker_ids = BTreeSet::new();
        let mut switch_ids = BTreeSet::new();
        for vb in &self.virtual_breakers {
            if !breaker_ids.insert(vb.id.as_str()) {
                return Err(invalid(format!("duplicate virtual breaker id {:?}", vb.id)));
            }
            if vb.switches.0 == vb.switches.1 {
                return Err(invalid(format!(
                    "virtual breaker {:?}: switch pair must name two distinct switches",
                    vb.id
                )));
            }
            for s in [&vb.switches.0, &vb.switches.1] {
                if !switch_ids.insert(s.as_str()) {
                    return Err(invalid(format!("switch {:?} appears in two breakers", s)));
                }
            }
        }

        let mut branch_ids = BTreeSet::new();
        let mut used_breakers = BTreeSet::new();
        for br in &self.branches {
            if !branch_ids.insert(br.id.as_str()) {
                return Err(invalid(format!("duplicate branch id {:?}", br.id)));
            }
            if br.from == br.to {
                return Err(invalid(format!("branch {:?}: from == to", br.id)));
            }
            for end in [&br.from, &br.to] {
                if !bus_ids.contains(end.as_str()) {
                    return Err(invalid(format!(
                        "branch {:?} references unknown bus {:?}",
                        br.id, end
                    )));
                }
            }
            if br.r_ohm < 0.0 {
                return Err(invalid(format!("branch {:?}: negative resistance", br.id)));
            }
            if br.imax_a <= 0.0 {
                return Err(invalid(format!(
                    "branch {:?}: imax_a must be positive",
                    br.id
                )));
            }
            // Per-unit arithmetic uses one voltage base per feeder, so a
            // segment may not bridge two different nominal levels.
            let from_kv = self.bus(&br.from).unwrap().nominal_kv;
            let to_kv = self.bus(&br.to).unwrap().nominal_kv;
            if (from_kv - to_kv).abs() > 1e-9 {
                return Err(invalid(format!(
                    "branch {:?} connects buses with different nominal_kv ({} vs {})",
                    br.id, from_kv, to_kv
                )));
            }
            if let Some(vb) = &br.breaker {
                if !breaker_ids.contains(vb.as_str()) {
                    return Err(invalid(format!(
                        "branch {:?} references unknown virtual breaker {:?}",
                        br.id, vb
                    )));
                }
                if !used_breakers.insert(vb.as_str()) {
                    return Err(invalid(format!(
                        "virtual breaker {:?} is referenced by more than one branch",
                        vb
                    )));
                }
            }
        }
        for vb in &self.virtual_breakers {
            if !used_breakers.contains(vb.id.as_str()) {
                return Err(invalid(format!(
                    "virtual breaker {:?} is not attached to any branch",
                    vb.id
                )));
            }
        }

        let mut element_ids = BTreeSet::new();
        for g in &self.generators {
            if !element_ids.insert(g.id.as_str()) {
                return Err(invalid(format!("duplicate element id {:?}", g.id)));
            }
            if !bus_ids.contains(g.bus.as_str()) {
                return Err(invalid(format!(
                    "generator {:?} references unknown bus {:?}",
                    g.id, g.bus
                )));
            }
            if g.phase_controllable && g.phase_range_rad.0 > g.phase_range_rad.1 {
                return Err(invalid(format!(
                    "generator {:?}: phase range min > max",
                    g.id
                )));
            }
        }
        for l in &self.loads {
            if !element_ids.insert(l.id.as_str()) {
                return Err(invalid(format!("duplicate element id {:?}", l.id)));
            }
            if !bus_ids.contains(l.bus.as_str()) {
                return Err(invalid(format!(
                    "load {:?} references unknown bus {:?}",
                    l.id, l.bus
                )));
            }
        }

        if let Some(tvr) = &self.tvr {
            if !branch_ids.contains(tvr.branch.as_str()) {
                return Err(invalid(format!(
                    "tvr references unknown branch {:?}",
                    tvr.branch
                )));
            }
            if !tvr.tap_set.contains(&0) {
                return Err(invalid("tvr tap_set must contain 0"));
            }
            if tvr.delta_v_kv <= 0.0 {
                return Err(invalid("tvr delta_v_kv must be positive"));
            }
        }

        self.check_connected_all_closed()?;
        Ok(())
    }

    /// The network must be one piece when every breaker is closed, otherwise
    /// part of it could never be fed by any configuration.
    fn check_connected_all_closed(&self) -> Result<(), ModelError> {
        if self.buses.is_empty() {
            return Err(invalid("network has no buses"));
        }
        let index: BTreeMap<&str, usize> = self
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); self.buses.len()];
        for br in &self.branches {
            let a = index[br.from.as_str()];
            let b = index[br.to.as_str()];
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(invalid(format!(
                "bus {:?} is disconnected even with all breakers closed",
                self.buses[i].id
            )));
        }
        Ok(())
    }
}

/// Parse and validate a network description file.
pub fn load_network(path: &Path) -> Result<NetworkModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let model: NetworkModel = serde_json::from_str(&text)?;
    model.validate()?;
    Ok(model)
}
