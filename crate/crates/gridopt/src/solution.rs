//! Candidate solution genome and its search domain.
//!
//! A candidate is `[phi_1..phi_m, n_tap, n_conf]`: one power-factor angle per
//! controllable generator, the regulator tap, and a 1-based index into the
//! ordered configuration list. The configuration index is treated as an
//! ordinal value, which is what the Hamming ordering of the list is for.

use serde::{Deserialize, Serialize};

use crate::model::NetworkModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSolution {
    /// Power-factor angles in radians, one per controllable generator in
    /// model order.
    pub phases: Vec<f64>,
    pub n_tap: i32,
    /// 1-based index into the ordered configuration list.
    pub n_conf: usize,
}

/// Box constraints for the genome.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDomain {
    pub phase_ranges: Vec<(f64, f64)>,
    /// Sorted tap values; `[0]` when the network has no regulator.
    pub tap_values: Vec<i32>,
    pub n_configs: usize,
}

impl SearchDomain {
    pub fn from_model(model: &NetworkModel, n_configs: usize) -> Self {
        let phase_ranges = model
            .controllable_generators()
            .map(|g| g.phase_range_rad)
            .collect();
        let mut tap_values = match &model.tvr {
            Some(tvr) => tvr.tap_set.clone(),
            None => vec![0],
        };
        tap_values.sort_unstable();
        tap_values.dedup();
        SearchDomain {
            phase_ranges,
            tap_values,
            n_configs,
        }
    }

    pub fn contains(&self, candidate: &CandidateSolution) -> bool {
        candidate.phases.len() == self.phase_ranges.len()
            && candidate
                .phases
                .iter()
                .zip(&self.phase_ranges)
                .all(|(phi, (lo, hi))| *phi >= *lo && *phi <= *hi)
            && self.tap_values.contains(&candidate.n_tap)
            && candidate.n_conf >= 1
            && candidate.n_conf <= self.n_configs
    }
}
