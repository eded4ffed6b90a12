//! Steady-state AC power flow on a radial configuration.
//!
//! The solver is a backward/forward sweep over each HV-rooted feeder tree,
//! which is the standard method for radial networks: the backward pass
//! accumulates complex branch currents from the leaves, the forward pass
//! propagates voltages down from the slack bus, and the two alternate until
//! the voltage iterate settles. Every HV bus is an ideal slack pinned at
//! nominal voltage. Arithmetic is per-unit on a 1 MVA base with each bus's
//! nominal voltage as its voltage base.
//!
//! Elements:
//! - loads consume the complex power of their hourly profile;
//! - generators inject their profiled active power with reactive power
//!   `Q = P tan(phi)`, where `phi` is the candidate's angle for controllable
//!   units and the fixed angle otherwise;
//! - the series regulator scales the downstream voltage magnitude so that
//!   `|V_out| = |V_in| + n_tap * delta_v`, transforming current in inverse
//!   proportion so the device itself conserves power;
//! - open branches carry zero current.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{BusKind, NetworkModel};
use crate::profiles::HourlyProfiles;
use crate::solution::CandidateSolution;
use crate::topology::{conducting_branches, Configuration, ReducedGraph, TopologyError};

/// System power base: 1 MVA.
pub const S_BASE_VA: f64 = 1.0e6;
pub const S_BASE_KW: f64 = 1.0e3;

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("configuration is not radial: {0}")]
    NonRadial(String),
    #[error("candidate outside the search domain: {0}")]
    InvalidCandidate(String),
    #[error("profiles incomplete: {0}")]
    Profiles(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Convergence threshold on the max per-bus voltage change, per unit.
    pub tol_pu: f64,
    pub max_iter: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            tol_pu: 1e-8,
            max_iter: 100,
        }
    }
}

/// Complex current through one branch, in amps, signed along the branch's
/// `from -> to` orientation. The two ends differ only across the regulator,
/// which trades current for voltage; `i_line_a` is the current through the
/// series impedance and is the one checked against `imax_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub i_from_a: Complex64,
    pub i_to_a: Complex64,
    pub i_line_a: Complex64,
}

impl BranchFlow {
    const ZERO: BranchFlow = BranchFlow {
        i_from_a: Complex64::new(0.0, 0.0),
        i_to_a: Complex64::new(0.0, 0.0),
        i_line_a: Complex64::new(0.0, 0.0),
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowResult {
    /// Per-bus complex voltage, volts.
    pub v: BTreeMap<String, Complex64>,
    /// Per-branch flow; open branches carry zero.
    pub flows: BTreeMap<String, BranchFlow>,
    /// Per-bus consumed complex power actually applied, VA
    /// (loads minus generation).
    pub s_consumed_va: BTreeMap<String, Complex64>,
    pub p_gen_kw: f64,
    pub p_load_kw: f64,
    pub p_loss_kw: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl PowerFlowResult {
    pub fn v_mag_volts(&self, bus: &str) -> Option<f64> {
        self.v.get(bus).map(|v| v.norm())
    }

    pub fn i_mag_amps(&self, branch: &str) -> Option<f64> {
        self.flows.get(branch).map(|f| f.i_line_a.norm())
    }
}

struct TreeBranch {
    branch_idx: usize,
    parent: usize,
    child: usize,
    /// +1 when parent == from.
    sign: f64,
    z_pu: Complex64,
    /// Magnitude shift applied by the regulator, per unit of this branch's
    /// voltage base; 0 elsewhere.
    shift_pu: f64,
}

/// Solve the power flow for one configuration and candidate setting.
///
/// Non-convergence is reported in the result (`converged = false`) with the
/// last iterate attached; a non-radial conducting subgraph is an error.
pub fn solve(
    model: &NetworkModel,
    g: &ReducedGraph,
    conf: &Configuration,
    candidate: &CandidateSolution,
    profiles: &HourlyProfiles,
    settings: &SweepSettings,
) -> Result<PowerFlowResult, PowerFlowError> {
    let n_ctrl = model.controllable_generators().count();
    if candidate.phases.len() != n_ctrl {
        return Err(PowerFlowError::InvalidCandidate(format!(
            "{} phase genes for {} controllable generators",
            candidate.phases.len(),
            n_ctrl
        )));
    }
    for (phi, gen) in candidate.phases.iter().zip(model.controllable_generators()) {
        let (lo, hi) = gen.phase_range_rad;
        if !(*phi >= lo && *phi <= hi) {
            return Err(PowerFlowError::InvalidCandidate(format!(
                "phase {} outside [{lo}, {hi}] for generator {:?}",
                phi, gen.id
            )));
        }
    }
    if let Some(tvr) = &model.tvr {
        if !tvr.tap_set.contains(&candidate.n_tap) {
            return Err(PowerFlowError::InvalidCandidate(format!(
                "tap {} not in the regulator tap set",
                candidate.n_tap
            )));
        }
    } else if candidate.n_tap != 0 {
        return Err(PowerFlowError::InvalidCandidate(
            "nonzero tap on a network without a regulator".into(),
        ));
    }

    let bus_index: BTreeMap<&str, usize> = model
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let n_bus = model.buses.len();

    // Per-bus consumed power, per unit.
    let mut s_consumed_pu = vec![Complex64::new(0.0, 0.0); n_bus];
    for load in &model.loads {
        let sample = profiles.get(&load.id).ok_or_else(|| {
            PowerFlowError::Profiles(format!("no sample for load {:?}", load.id))
        })?;
        s_consumed_pu[bus_index[load.bus.as_str()]] +=
            Complex64::new(sample.p_kw, sample.q_kvar) / S_BASE_KW;
    }
    let mut phase_iter = candidate.phases.iter();
    for gen in &model.generators {
        let sample = profiles.get(&gen.id).ok_or_else(|| {
            PowerFlowError::Profiles(format!("no sample for generator {:?}", gen.id))
        })?;
        let phi = if gen.phase_controllable {
            *phase_iter.next().expect("arity checked above")
        } else {
            gen.fixed_phase_rad
        };
        let p = sample.p_kw;
        let q = p * phi.tan();
        s_consumed_pu[bus_index[gen.bus.as_str()]] -= Complex64::new(p, q) / S_BASE_KW;
    }

    // Conducting subgraph and its radiality.
    let conducting = conducting_branches(model, g, conf)?;
    let branch_index: BTreeMap<&str, usize> = model
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut is_conducting = vec![false; model.branches.len()];
    for id in &conducting {
        is_conducting[branch_index[id.as_str()]] = true;
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_bus];
    for (bi, br) in model.branches.iter().enumerate() {
        if is_conducting[bi] {
            adjacency[bus_index[br.from.as_str()]].push(bi);
            adjacency[bus_index[br.to.as_str()]].push(bi);
        }
    }

    // Root a tree at every HV bus; every MV bus must land in exactly one of
    // them with no cycles and no route between two substations.
    let mut owner = vec![usize::MAX; n_bus];
    let mut reached_via: Vec<Option<usize>> = vec![None; n_bus];
    let mut order: Vec<TreeBranch> = Vec::new();
    for (i, bus) in model.buses.iter().enumerate() {
        if bus.kind == BusKind::Hv {
            owner[i] = i;
        }
    }
    for (root, bus) in model.buses.iter().enumerate() {
        if bus.kind != BusKind::Hv {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &bi in &adjacency[v] {
                if reached_via[v] == Some(bi) {
                    continue; // the branch we arrived through
                }
                let br = &model.branches[bi];
                let (f, t) = (bus_index[br.from.as_str()], bus_index[br.to.as_str()]);
                let w = if f == v { t } else { f };
                if owner[w] != usize::MAX {
                    let detail = if owner[w] != owner[v] {
                        format!(
                            "substations {:?} and {:?} are connected",
                            model.buses[owner[v]].id, model.buses[owner[w]].id
                        )
                    } else {
                        format!("cycle through branch {:?}", br.id)
                    };
                    return Err(PowerFlowError::NonRadial(detail));
                }
                owner[w] = owner[v];
                reached_via[w] = Some(bi);
                let v_base = model.buses[w].nominal_kv * 1e3;
                let z_base = v_base * v_base / S_BASE_VA;
                let shift_pu = match &model.tvr {
                    Some(tvr) if tvr.branch == br.id => {
                        candidate.n_tap as f64 * tvr.delta_v_kv * 1e3 / v_base
                    }
                    _ => 0.0,
                };
                order.push(TreeBranch {
                    branch_idx: bi,
                    parent: v,
                    child: w,
                    sign: if f == v { 1.0 } else { -1.0 },
                    z_pu: Complex64::new(br.r_ohm, br.x_ohm) / z_base,
                    shift_pu,
                });
                queue.push_back(w);
            }
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(PowerFlowError::NonRadial(format!(
            "bus {:?} is not fed by any substation",
            model.buses[i].id
        )));
    }

    // Sweep iteration, all in per-unit.
    let mut v_pu = vec![Complex64::new(1.0, 0.0); n_bus];
    let mut i_line = vec![Complex64::new(0.0, 0.0); order.len()];
    let mut ratio = vec![1.0f64; order.len()];
    let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); n_bus];
    for (ti, tb) in order.iter().enumerate() {
        children_of[tb.parent].push(ti);
    }

    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=settings.max_iter {
        iterations = iter;
        backward(&order, &children_of, &s_consumed_pu, &v_pu, &mut i_line, &mut ratio);
        let mut delta: f64 = 0.0;
        let mut finite = true;
        for (ti, tb) in order.iter().enumerate() {
            let a = ratio_of(v_pu[tb.parent], tb.shift_pu);
            let next = v_pu[tb.parent] * a - tb.z_pu * i_line[ti];
            delta = delta.max((next - v_pu[tb.child]).norm());
            v_pu[tb.child] = next;
            if !(next.re.is_finite() && next.im.is_finite()) {
                finite = false;
            }
        }
        if !finite {
            break;
        }
        if delta < settings.tol_pu {
            converged = true;
            break;
        }
    }
    // One more backward pass so the reported currents satisfy Kirchhoff's
    // current law exactly at the reported voltages.
    backward(&order, &children_of, &s_consumed_pu, &v_pu, &mut i_line, &mut ratio);

    // Assemble physical-unit results.
    let mut v = BTreeMap::new();
    for (i, bus) in model.buses.iter().enumerate() {
        v.insert(bus.id.clone(), v_pu[i] * bus.nominal_kv * 1e3);
    }
    let mut flows: BTreeMap<String, BranchFlow> = model
        .branches
        .iter()
        .map(|b| (b.id.clone(), BranchFlow::ZERO))
        .collect();
    for (ti, tb) in order.iter().enumerate() {
        let br = &model.branches[tb.branch_idx];
        let v_base = model.buses[tb.child].nominal_kv * 1e3;
        let i_base = S_BASE_VA / v_base;
        let line = tb.sign * i_line[ti] * i_base;
        let parent_side = tb.sign * ratio[ti] * i_line[ti] * i_base;
        let (i_from_a, i_to_a) = if tb.sign > 0.0 {
            (parent_side, line)
        } else {
            (line, parent_side)
        };
        flows.insert(
            br.id.clone(),
            BranchFlow {
                i_from_a,
                i_to_a,
                i_line_a: line,
            },
        );
    }

    let mut s_consumed_va = BTreeMap::new();
    for (i, bus) in model.buses.iter().enumerate() {
        s_consumed_va.insert(bus.id.clone(), s_consumed_pu[i] * S_BASE_VA);
    }

    // Slack power: feeder outflow plus anything consumed on the HV bar.
    let mut p_slack_pu = 0.0;
    for (i, bus) in model.buses.iter().enumerate() {
        if bus.kind != BusKind::Hv {
            continue;
        }
        let mut injected = Complex64::new(0.0, 0.0);
        for &ti in &children_of[i] {
            injected += ratio[ti] * i_line[ti];
        }
        p_slack_pu += (v_pu[i] * injected.conj()).re + s_consumed_pu[i].re;
    }

    let mut p_gen_kw = p_slack_pu * S_BASE_KW;
    let mut p_load_kw = 0.0;
    for load in &model.loads {
        p_load_kw += profiles.get(&load.id).unwrap().p_kw;
    }
    for gen in &model.generators {
        p_gen_kw += profiles.get(&gen.id).unwrap().p_kw;
    }
    let p_loss_kw = p_gen_kw - p_load_kw;

    Ok(PowerFlowResult {
        v,
        flows,
        s_consumed_va,
        p_gen_kw,
        p_load_kw,
        p_loss_kw,
        converged,
        iterations,
    })
}

fn ratio_of(v_parent: Complex64, shift_pu: f64) -> f64 {
    if shift_pu == 0.0 {
        1.0
    } else {
        let mag = v_parent.norm();
        (mag + shift_pu) / mag
    }
}

/// Leaf-to-root accumulation of line currents at the given voltages.
fn backward(
    order: &[TreeBranch],
    children_of: &[Vec<usize>],
    s_consumed_pu: &[Complex64],
    v_pu: &[Complex64],
    i_line: &mut [Complex64],
    ratio: &mut [f64],
) {
    for (ti, tb) in order.iter().enumerate().rev() {
        let child = tb.child;
        let mut current = (s_consumed_pu[child] / v_pu[child]).conj();
        for &ci in &children_of[child] {
            current += ratio[ci] * i_line[ci];
        }
        i_line[ti] = current;
        ratio[ti] = ratio_of(v_pu[tb.parent], tb.shift_pu);
    }
}

/// Difference between the two loss computations: `p_gen - p_load` versus the
/// ohmic sum over branches. Returns kW.
pub fn losses_identity_check(model: &NetworkModel, result: &PowerFlowResult) -> f64 {
    let ohmic_kw: f64 = model
        .branches
        .iter()
        .map(|br| {
            let i = result.flows[&br.id].i_line_a.norm();
            i * i * br.r_ohm / 1e3
        })
        .sum();
    (result.p_loss_kw - ohmic_kw).abs()
}

/// Largest per-unit current-balance residual over the MV buses, computed
/// from the reported voltages, flows, and consumed powers alone.
pub fn max_kirchhoff_residual_pu(model: &NetworkModel, result: &PowerFlowResult) -> f64 {
    let mut worst: f64 = 0.0;
    for bus in &model.buses {
        if bus.kind == BusKind::Hv {
            continue;
        }
        let v = result.v[&bus.id];
        let s = result.s_consumed_va[&bus.id];
        let consumed = if s.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (s / v).conj()
        };
        let mut balance = -consumed;
        for br in &model.branches {
            if br.to == bus.id {
                balance += result.flows[&br.id].i_to_a;
            }
            if br.from == bus.id {
                balance -= result.flows[&br.id].i_from_a;
            }
        }
        let i_base = S_BASE_VA / (bus.nominal_kv * 1e3);
        worst = worst.max(balance.norm() / i_base);
    }
    worst
}

/// Per-solve trace: bus voltages in per-unit, branch currents in amps.
pub fn trace_csv(model: &NetworkModel, result: &PowerFlowResult) -> String {
    let mut out = String::from("bus_id,v_pu\n");
    for bus in &model.buses {
        let v_pu = result.v[&bus.id].norm() / (bus.nominal_kv * 1e3);
        out.push_str(&format!("{},{}\n", bus.id, v_pu));
    }
    out.push_str("branch_id,i_a\n");
    for br in &model.branches {
        out.push_str(&format!("{},{}\n", br.id, result.flows[&br.id].i_line_a.norm()));
    }
    out
}
