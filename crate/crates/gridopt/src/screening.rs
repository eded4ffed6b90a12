//! Monte-Carlo screening of admissible configurations and prototype
//! extraction.
//!
//! For a fixed configuration index the remaining genome dimensions are
//! sampled uniformly; the spread of the objective over those draws tells
//! whether the configuration can ever satisfy the electrical constraints.
//! A configuration with enough feasible draws is constraint compliant
//! (CCC), one with none is not (NCCC), anything in between stays ambiguous.
//! Each class is then summarized by its MinSOD member: the configuration
//! minimizing the summed Hamming distance to the rest of its class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{BusKind, NetworkModel};
use crate::objective::{evaluate, NormalizationDiagnostics, ObjectiveError, ObjectiveParams};
use crate::powerflow::{solve, PowerFlowError, SweepSettings};
use crate::profiles::HourlyProfiles;
use crate::solution::{CandidateSolution, SearchDomain};
use crate::stats::{eta, mean_std};
use crate::topology::{Bits, Configuration, ConfigurationList, ReducedGraph};

#[derive(Debug, Error)]
pub enum ScreeningError {
    #[error("configuration index {0} is out of range")]
    InvalidIndex(usize),
    #[error("cannot take the prototype of an empty set")]
    EmptySet,
    #[error("class {0:?} is empty; prototypes need both classes populated")]
    EmptyClass(ConfigClass),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error("objective: {0}")]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigClass {
    #[serde(rename = "CCC")]
    Ccc,
    #[serde(rename = "NCCC")]
    Nccc,
    #[serde(rename = "AMBIGUOUS")]
    Ambiguous,
}

impl std::fmt::Display for ConfigClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConfigClass::Ccc => "CCC",
            ConfigClass::Nccc => "NCCC",
            ConfigClass::Ambiguous => "AMBIGUOUS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSettings {
    pub samples: usize,
    pub gamma_tol: f64,
    /// Smallest feasible fraction that still counts as compliant.
    pub ccc_fraction: f64,
}

impl Default for SamplingSettings {
    fn default() -> Self {
        SamplingSettings {
            samples: 2000,
            gamma_tol: 1e-9,
            ccc_fraction: 0.05,
        }
    }
}

/// One converged draw of the non-topological genome dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub n_tap: i32,
    pub f: f64,
    pub j: f64,
    pub gamma_v: f64,
    pub gamma_i: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub n_conf: usize,
    /// Draws requested; `draws.len() + excluded == samples`.
    pub samples: usize,
    pub draws: Vec<SampleDraw>,
    /// Diverged power flows, excluded from the statistics.
    pub excluded: usize,
    pub mean_f: f64,
    pub std_f: f64,
    pub eta: f64,
    pub j_max: f64,
    pub gamma_max: f64,
    pub feasible_fraction: f64,
    pub class: ConfigClass,
}

impl SamplingReport {
    pub fn f_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.draws.iter().map(|d| d.f)
    }

    pub fn j_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.draws.iter().map(|d| d.j)
    }

    pub fn gamma_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.draws.iter().map(|d| d.gamma)
    }

    /// Effective loss weight implied by the observed maxima, when both are
    /// positive (see `objective::alpha_eq`).
    pub fn normalization(&self, alpha: f64) -> Option<NormalizationDiagnostics> {
        crate::objective::alpha_eq(alpha, self.j_max, self.gamma_max)
            .ok()
            .map(|alpha_eq| NormalizationDiagnostics {
                j_max: self.j_max,
                gamma_max: self.gamma_max,
                alpha_eq,
            })
    }
}

/// Classification rule over a finished report.
pub fn classify(report: &SamplingReport, gamma_tol: f64, ccc_fraction: f64) -> ConfigClass {
    let included = report.draws.len();
    if included == 0 {
        return ConfigClass::Ambiguous;
    }
    let feasible = report.draws.iter().filter(|d| d.gamma <= gamma_tol).count();
    let fraction = feasible as f64 / included as f64;
    if fraction >= ccc_fraction {
        ConfigClass::Ccc
    } else if feasible == 0 {
        ConfigClass::Nccc
    } else {
        ConfigClass::Ambiguous
    }
}

/// Sample the objective at `samples` random parameter settings with the
/// configuration held fixed. The random stream is keyed by
/// `(seed, n_conf)`, so per-configuration runs are order-independent.
#[allow(clippy::too_many_arguments)]
pub fn sample_configuration(
    model: &NetworkModel,
    g: &ReducedGraph,
    list: &ConfigurationList,
    profiles: &HourlyProfiles,
    n_conf: usize,
    params: &ObjectiveParams,
    sampling: &SamplingSettings,
    seed: u64,
) -> Result<SamplingReport, ScreeningError> {
    sample_configuration_impl(model, g, list, profiles, n_conf, params, sampling, seed)
}

#[allow(clippy::too_many_arguments)]
fn sample_configuration_impl(
    model: &NetworkModel,
    g: &ReducedGraph,
    list: &ConfigurationList,
    profiles: &HourlyProfiles,
    n_conf: usize,
    params: &ObjectiveParams,
    sampling: &SamplingSettings,
    seed: u64,
) -> Result<SamplingReport, ScreeningError> {
    let conf = list
        .get(n_conf)
        .ok_or(ScreeningError::InvalidIndex(n_conf))?;
    let domain = SearchDomain::from_model(model, list.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n_conf as u64);
    let sweep = SweepSettings::default();

    let mut draws = Vec::with_capacity(sampling.samples);
    let mut excluded = 0usize;
    for _ in 0..sampling.samples {
        let candidate = CandidateSolution {
            phases: domain
                .phase_ranges
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect(),
            n_tap: domain.tap_values[rng.gen_range(0..domain.tap_values.len())],
            n_conf,
        };
        let result = solve(model, g, conf, &candidate, profiles, &sweep)?;
        if !result.converged {
            excluded += 1;
            continue;
        }
        let breakdown = evaluate(&result, model, params)?;
        draws.push(SampleDraw {
            n_tap: candidate.n_tap,
            f: breakdown.f,
            j: breakdown.j,
            gamma_v: breakdown.gamma_v,
            gamma_i: breakdown.gamma_i,
            gamma: breakdown.gamma,
        });
    }

    let f_values: Vec<f64> = draws.iter().map(|d| d.f).collect();
    let (mean_f, std_f) = mean_std(&f_values);
    let j_max = draws.iter().map(|d| d.j).fold(0.0f64, f64::max);
    let gamma_max = draws.iter().map(|d| d.gamma).fold(0.0f64, f64::max);
    let feasible = draws
        .iter()
        .filter(|d| d.gamma <= sampling.gamma_tol)
        .count();
    let feasible_fraction = if draws.is_empty() {
        0.0
    } else {
        feasible as f64 / draws.len() as f64
    };
    let mut report = SamplingReport {
        n_conf,
        samples: sampling.samples,
        draws,
        excluded,
        mean_f,
        std_f,
        eta: eta(mean_f, std_f),
        j_max,
        gamma_max,
        feasible_fraction,
        class: ConfigClass::Ambiguous,
    };
    report.class = classify(&report, sampling.gamma_tol, sampling.ccc_fraction);
    Ok(report)
}

/// Per-tap mean of the objective, for the banding analysis of the sampling
/// figures.
pub fn per_tap_means(report: &SamplingReport) -> Vec<(i32, f64, usize)> {
    let mut taps: Vec<i32> = report.draws.iter().map(|d| d.n_tap).collect();
    taps.sort_unstable();
    taps.dedup();
    taps.into_iter()
        .map(|tap| {
            let values: Vec<f64> = report
                .draws
                .iter()
                .filter(|d| d.n_tap == tap)
                .map(|d| d.f)
                .collect();
            let (mean, _) = mean_std(&values);
            (tap, mean, values.len())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub ccc: Vec<usize>,
    pub nccc: Vec<usize>,
    pub ambiguous: Vec<usize>,
}

/// Screen every configuration in the list. Runs per-configuration sampling
/// in parallel; results are deterministic for a given seed regardless of
/// thread scheduling.
pub fn screen_all(
    model: &NetworkModel,
    g: &ReducedGraph,
    list: &ConfigurationList,
    profiles: &HourlyProfiles,
    params: &ObjectiveParams,
    sampling: &SamplingSettings,
    seed: u64,
) -> Result<(ClassPartition, Vec<SamplingReport>), ScreeningError> {
    let reports: Vec<SamplingReport> = (1..=list.len())
        .into_par_iter()
        .map(|n_conf| sample_configuration_impl(model, g, list, profiles, n_conf, params, sampling, seed))
        .collect::<Result<_, _>>()?;
    let mut partition = ClassPartition {
        ccc: Vec::new(),
        nccc: Vec::new(),
        ambiguous: Vec::new(),
    };
    for report in &reports {
        match report.class {
            ConfigClass::Ccc => partition.ccc.push(report.n_conf),
            ConfigClass::Nccc => partition.nccc.push(report.n_conf),
            ConfigClass::Ambiguous => partition.ambiguous.push(report.n_conf),
        }
    }
    Ok((partition, reports))
}

/// The member of a set minimizing the sum of Hamming distances to all
/// members; ties go to the lexicographically smallest pattern.
pub fn minsod(configs: &[Bits]) -> Result<Bits, ScreeningError> {
    if configs.is_empty() {
        return Err(ScreeningError::EmptySet);
    }
    let mut best: Option<(&Bits, usize)> = None;
    for candidate in configs {
        let sod: usize = configs
            .iter()
            .map(|other| crate::topology::hamming(candidate, other).expect("equal lengths"))
            .sum();
        best = match best {
            None => Some((candidate, sod)),
            Some((b, s)) if sod < s || (sod == s && candidate < b) => Some((candidate, sod)),
            keep => keep,
        };
    }
    Ok(best.unwrap().0.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeederTree {
    pub root: String,
    /// MV nodes fed by this substation.
    pub node_count: usize,
    /// Longest hop distance from the substation in the reduced graph.
    pub depth: usize,
    pub load_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeederStats {
    pub tree_count: usize,
    pub max_depth: usize,
    pub trees: Vec<FeederTree>,
}

/// Feeder-shape metrics of one configuration, computed on the reduced graph.
pub fn feeder_stats(model: &NetworkModel, g: &ReducedGraph, conf: &Configuration) -> FeederStats {
    let n = g.nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    for (i, edge) in g.edges.iter().enumerate() {
        if conf.bits.closed(i) {
            adjacency[edge.endpoints.0].push(edge.endpoints.1);
            adjacency[edge.endpoints.1].push(edge.endpoints.0);
        }
    }
    let loads_on_node = |node: &crate::topology::ReducedNode| -> usize {
        model
            .loads
            .iter()
            .filter(|l| node.members.contains(&l.bus))
            .count()
    };

    let mut trees = Vec::new();
    for (root, node) in g.nodes.iter().enumerate() {
        if node.kind != BusKind::Hv {
            continue;
        }
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        let mut node_count = 0;
        let mut depth = 0;
        let mut load_count = 0;
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    node_count += 1;
                    depth = depth.max(dist[w]);
                    load_count += loads_on_node(&g.nodes[w]);
                    queue.push_back(w);
                }
            }
        }
        if node_count > 0 {
            trees.push(FeederTree {
                root: node.id.clone(),
                node_count,
                depth,
                load_count,
            });
        }
    }
    FeederStats {
        tree_count: trees.len(),
        max_depth: trees.iter().map(|t| t.depth).max().unwrap_or(0),
        trees,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub class: ConfigClass,
    pub n_conf: usize,
    pub bits: Bits,
    /// Sum of Hamming distances to the rest of the class.
    pub sod: usize,
    pub stats: FeederStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeReport {
    pub ccc: Prototype,
    pub nccc: Prototype,
}

/// MinSOD prototype of each class plus its feeder metrics. Errors when
/// either class is empty.
pub fn prototype_report(
    partition: &ClassPartition,
    list: &ConfigurationList,
    model: &NetworkModel,
    g: &ReducedGraph,
) -> Result<PrototypeReport, ScreeningError> {
    let build = |indices: &[usize], class: ConfigClass| -> Result<Prototype, ScreeningError> {
        if indices.is_empty() {
            return Err(ScreeningError::EmptyClass(class));
        }
        let members: Vec<Bits> = indices
            .iter()
            .map(|&i| {
                list.get(i)
                    .map(|c| c.bits.clone())
                    .ok_or(ScreeningError::InvalidIndex(i))
            })
            .collect::<Result<_, _>>()?;
        let bits = minsod(&members)?;
        let sod = members
            .iter()
            .map(|m| crate::topology::hamming(&bits, m).expect("equal lengths"))
            .sum();
        let n_conf = indices
            .iter()
            .copied()
            .find(|&i| list.get(i).unwrap().bits == bits)
            .expect("minsod returns a member");
        let conf = list.get(n_conf).unwrap();
        Ok(Prototype {
            class,
            n_conf,
            bits,
            sod,
            stats: feeder_stats(model, g, conf),
        })
    };
    Ok(PrototypeReport {
        ccc: build(&partition.ccc, ConfigClass::Ccc)?,
        nccc: build(&partition.nccc, ConfigClass::Nccc)?,
    })
}
