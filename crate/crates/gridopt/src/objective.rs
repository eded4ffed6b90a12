//! Loss cost, constraint penalties, and their convex combination.
//!
//! The cost of a solved state is `j = p_loss / p_gen`, which lives in [0, 1).
//! Voltage and current violations enter through quadratic penalties outside
//! the admissible bands, aggregated with a max (not a sum) per kind, and the
//! fitness is `f = alpha * j + (1 - alpha) * gamma` with
//! `gamma = (1 - beta) * gamma_i + beta * gamma_v`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NetworkModel;
use crate::powerflow::PowerFlowResult;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("power flow did not converge; no objective is defined")]
    NotConverged,
    #[error("invalid solved state: {0}")]
    InvalidResult(String),
    #[error("normalization maxima must be positive (j_max={j_max}, gamma_max={gamma_max})")]
    NonPositiveMaxima { j_max: f64, gamma_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    /// Weight of the loss term against the violation term.
    pub alpha: f64,
    /// Weight of the voltage violation against the current violation.
    pub beta: f64,
    pub kappa_v: f64,
    pub kappa_i: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            alpha: 0.9,
            beta: 0.2,
            kappa_v: 100.0,
            kappa_i: 100.0,
        }
    }
}

/// Fitness assigned to candidates whose power flow failed to converge, far
/// above anything a solved state can produce.
pub const NONCONVERGED_FITNESS: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub j: f64,
    pub gamma_v: f64,
    pub gamma_i: f64,
    pub gamma: f64,
    pub f: f64,
    pub feasible: bool,
}

/// Observed normalization maxima over a sample set and the effective weight
/// they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationDiagnostics {
    pub j_max: f64,
    pub gamma_max: f64,
    pub alpha_eq: f64,
}

/// Voltage penalty over the ratio `v / v_nom` for a band `[lo, hi]`.
pub fn penalty_band(x: f64, lo: f64, hi: f64, kappa: f64) -> f64 {
    if x < lo {
        kappa * (lo - x) * (lo - x)
    } else if x > hi {
        kappa * (x - hi) * (x - hi)
    } else {
        0.0
    }
}

/// Voltage penalty with the regulatory +-10% band and default steepness.
pub fn penalty_v(x: f64) -> f64 {
    penalty_band(x, 0.9, 1.1, 100.0)
}

/// Current penalty over the ratio `i / i_max`: zero up to the limit,
/// quadratic beyond it.
pub fn penalty_i_with(x: f64, kappa: f64) -> f64 {
    if x > 1.0 {
        kappa * (x - 1.0) * (x - 1.0)
    } else {
        0.0
    }
}

pub fn penalty_i(x: f64) -> f64 {
    penalty_i_with(x, 100.0)
}

/// Worst-bus voltage penalty and worst-branch current penalty of a solved
/// state. Per-bus bands come from the model.
pub fn gamma_terms(
    result: &PowerFlowResult,
    model: &NetworkModel,
    params: &ObjectiveParams,
) -> Result<(f64, f64), ObjectiveError> {
    if !result.converged {
        return Err(ObjectiveError::NotConverged);
    }
    let mut gamma_v: f64 = 0.0;
    for bus in &model.buses {
        let ratio = result
            .v_mag_volts(&bus.id)
            .ok_or_else(|| ObjectiveError::InvalidResult(format!("no voltage for {:?}", bus.id)))?
            / (bus.nominal_kv * 1e3);
        gamma_v = gamma_v.max(penalty_band(ratio, bus.vmin_frac, bus.vmax_frac, params.kappa_v));
    }
    let mut gamma_i: f64 = 0.0;
    for br in &model.branches {
        let ratio = result
            .i_mag_amps(&br.id)
            .ok_or_else(|| ObjectiveError::InvalidResult(format!("no current for {:?}", br.id)))?
            / br.imax_a;
        gamma_i = gamma_i.max(penalty_i_with(ratio, params.kappa_i));
    }
    Ok((gamma_v, gamma_i))
}

/// Full objective breakdown of a converged state.
pub fn evaluate(
    result: &PowerFlowResult,
    model: &NetworkModel,
    params: &ObjectiveParams,
) -> Result<ObjectiveBreakdown, ObjectiveError> {
    if !result.converged {
        return Err(ObjectiveError::NotConverged);
    }
    if result.p_gen_kw <= 0.0 {
        return Err(ObjectiveError::InvalidResult(format!(
            "p_gen = {} kW",
            result.p_gen_kw
        )));
    }
    let mut p_loss = result.p_loss_kw;
    if p_loss < 0.0 {
        if p_loss < -1e-6 * result.p_gen_kw.max(1.0) {
            return Err(ObjectiveError::InvalidResult(format!(
                "negative losses: {} kW",
                p_loss
            )));
        }
        p_loss = 0.0;
    }
    let j = p_loss / result.p_gen_kw;
    let (gamma_v, gamma_i) = gamma_terms(result, model, params)?;
    let gamma = (1.0 - params.beta) * gamma_i + params.beta * gamma_v;
    let f = params.alpha * j + (1.0 - params.alpha) * gamma;
    Ok(ObjectiveBreakdown {
        j,
        gamma_v,
        gamma_i,
        gamma,
        f,
        feasible: gamma == 0.0,
    })
}

/// Effective loss weight once both objective terms are rescaled to [0, 1] by
/// their observed maxima.
pub fn alpha_eq(alpha: f64, j_max: f64, gamma_max: f64) -> Result<f64, ObjectiveError> {
    if !(j_max > 0.0 && gamma_max > 0.0) {
        return Err(ObjectiveError::NonPositiveMaxima { j_max, gamma_max });
    }
    Ok(alpha * j_max / (alpha * j_max + (1.0 - alpha) * gamma_max))
}
