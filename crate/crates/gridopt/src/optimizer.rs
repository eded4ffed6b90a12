//! Real-coded genetic algorithm over the mixed genome
//! `[phi_1..phi_m, n_tap, n_conf]`.
//!
//! Operators: tournament selection of size 2, per-gene blend crossover for
//! the angles with uniform pick for the integer genes, Gaussian mutation
//! (sigma = 10% of range) for the angles with single-step moves for the
//! integers. Children are repaired into the search domain; configuration
//! indices are projected to the nearest allowed index when the search is
//! restricted to a subset. Elites survive unchanged, so the per-generation
//! best never worsens. Every run is fully determined by its seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NetworkModel;
use crate::objective::{evaluate, ObjectiveError, ObjectiveParams, NONCONVERGED_FITNESS};
use crate::powerflow::{solve, PowerFlowError, SweepSettings};
use crate::profiles::HourlyProfiles;
use crate::solution::{CandidateSolution, SearchDomain};
use crate::topology::{ConfigurationList, ReducedGraph};

#[derive(Debug, Error)]
pub enum GaError {
    #[error("restriction set is empty")]
    EmptyRestriction,
    #[error("restriction contains index {0}, outside 1..={1}")]
    InvalidRestriction(usize, usize),
    #[error("initial population has {got} individuals, settings ask for {want}")]
    PopulationSize { got: usize, want: usize },
    #[error("entire population failed to converge at generation {generation}")]
    AllNonConvergent { generation: usize },
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error("objective: {0}")]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSettings {
    pub population: usize,
    pub elites: usize,
    pub crossover_fraction: f64,
    pub mutation_rate: f64,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub stall_tol: f64,
    pub seed: u64,
}

impl Default for GaSettings {
    fn default() -> Self {
        GaSettings {
            population: 20,
            elites: 2,
            crossover_fraction: 0.8,
            mutation_rate: 0.1,
            max_generations: 100,
            stall_generations: 50,
            stall_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Outcome of scoring one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub f: f64,
    pub p_loss_kw: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_f: f64,
    pub mean_f: f64,
    pub best_ploss_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: CandidateSolution,
    pub best_f: f64,
    pub best_ploss_w: f64,
    pub generations_run: usize,
    pub initial_best_f: f64,
    pub initial_best_ploss_w: f64,
    /// Percentage reduction of the fitness against the best initial
    /// individual.
    pub delta_f_pct: f64,
    /// Power-loss reduction against the best initial individual, watts.
    pub delta_p_loss_w: f64,
    pub history: Vec<GenerationStats>,
}

// Derived random streams of one seed. Initial sampling, pairing repair, and
// evolution draw from separate streams so that pairing two runs never
// perturbs the evolution sequence.
const STREAM_INITIAL: u64 = 0;
const STREAM_PAIRING: u64 = 1;
const STREAM_EVOLUTION: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn checked_restriction(restrict_to: &[usize], n_configs: usize) -> Result<Vec<usize>, GaError> {
    let mut r: Vec<usize> = restrict_to.to_vec();
    r.sort_unstable();
    r.dedup();
    if r.is_empty() {
        return Err(GaError::EmptyRestriction);
    }
    for &idx in &r {
        if idx < 1 || idx > n_configs {
            return Err(GaError::InvalidRestriction(idx, n_configs));
        }
    }
    Ok(r)
}

fn sample_candidate(rng: &mut ChaCha8Rng, domain: &SearchDomain, restrict: &[usize]) -> CandidateSolution {
    let phases = domain
        .phase_ranges
        .iter()
        .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
        .collect();
    let n_tap = domain.tap_values[rng.gen_range(0..domain.tap_values.len())];
    let n_conf = restrict[rng.gen_range(0..restrict.len())];
    CandidateSolution {
        phases,
        n_tap,
        n_conf,
    }
}

/// Uniform sample of the search domain. When `paired_with` is given, the
/// population is copied from it and only individuals whose configuration
/// gene falls outside `restrict_to` are replaced by fresh individuals whose
/// configuration gene is forced into the restriction.
pub fn build_initial_population(
    size: usize,
    domain: &SearchDomain,
    restrict_to: &[usize],
    paired_with: Option<&[CandidateSolution]>,
    seed: u64,
) -> Result<Vec<CandidateSolution>, GaError> {
    let restrict = checked_restriction(restrict_to, domain.n_configs)?;
    match paired_with {
        None => {
            let mut rng = stream_rng(seed, STREAM_INITIAL);
            Ok((0..size)
                .map(|_| sample_candidate(&mut rng, domain, &restrict))
                .collect())
        }
        Some(base) => {
            if base.len() != size {
                return Err(GaError::PopulationSize {
                    got: base.len(),
                    want: size,
                });
            }
            let mut rng = stream_rng(seed, STREAM_PAIRING);
            Ok(base
                .iter()
                .map(|ind| {
                    if restrict.binary_search(&ind.n_conf).is_ok() {
                        ind.clone()
                    } else {
                        sample_candidate(&mut rng, domain, &restrict)
                    }
                })
                .collect())
        }
    }
}

fn clamp(value: f64, lo: f64, hi: f64) -> f64 {
    value.max(lo).min(hi)
}

/// Project an index to the nearest member of the sorted restriction;
/// ties prefer the lower index.
fn project_to_restriction(n_conf: usize, restrict: &[usize]) -> usize {
    match restrict.binary_search(&n_conf) {
        Ok(_) => n_conf,
        Err(pos) => {
            if pos == 0 {
                restrict[0]
            } else if pos == restrict.len() {
                restrict[restrict.len() - 1]
            } else {
                let below = restrict[pos - 1];
                let above = restrict[pos];
                if n_conf - below <= above - n_conf {
                    below
                } else {
                    above
                }
            }
        }
    }
}

fn repair(candidate: &mut CandidateSolution, domain: &SearchDomain, restrict: &[usize]) {
    for (phi, (lo, hi)) in candidate.phases.iter_mut().zip(&domain.phase_ranges) {
        *phi = clamp(*phi, *lo, *hi);
    }
    if !domain.tap_values.contains(&candidate.n_tap) {
        let nearest = domain
            .tap_values
            .iter()
            .copied()
            .min_by_key(|t| ((*t - candidate.n_tap).abs(), *t))
            .expect("tap set is never empty");
        candidate.n_tap = nearest;
    }
    let clamped = candidate.n_conf.clamp(1, domain.n_configs.max(1));
    candidate.n_conf = project_to_restriction(clamped, restrict);
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn tournament(rng: &mut ChaCha8Rng, fitness: &[f64]) -> usize {
    let a = rng.gen_range(0..fitness.len());
    let b = rng.gen_range(0..fitness.len());
    if fitness[a] <= fitness[b] {
        a
    } else {
        b
    }
}

fn blend_crossover(
    rng: &mut ChaCha8Rng,
    p1: &CandidateSolution,
    p2: &CandidateSolution,
) -> CandidateSolution {
    let phases = p1
        .phases
        .iter()
        .zip(&p2.phases)
        .map(|(a, b)| {
            let u: f64 = rng.gen();
            u * a + (1.0 - u) * b
        })
        .collect();
    let n_tap = if rng.gen::<bool>() { p1.n_tap } else { p2.n_tap };
    let n_conf = if rng.gen::<bool>() { p1.n_conf } else { p2.n_conf };
    CandidateSolution {
        phases,
        n_tap,
        n_conf,
    }
}

fn mutate(
    rng: &mut ChaCha8Rng,
    parent: &CandidateSolution,
    domain: &SearchDomain,
    rate: f64,
) -> CandidateSolution {
    let mut child = parent.clone();
    for (phi, (lo, hi)) in child.phases.iter_mut().zip(&domain.phase_ranges) {
        if rng.gen::<f64>() < rate {
            *phi += gaussian(rng) * 0.1 * (hi - lo);
        }
    }
    if rng.gen::<f64>() < rate {
        let pos = domain
            .tap_values
            .iter()
            .position(|t| *t == child.n_tap)
            .unwrap_or(0);
        let step: isize = if rng.gen::<bool>() { 1 } else { -1 };
        let new_pos = (pos as isize + step).clamp(0, domain.tap_values.len() as isize - 1);
        child.n_tap = domain.tap_values[new_pos as usize];
    }
    if rng.gen::<f64>() < rate {
        let step: isize = if rng.gen::<bool>() { 1 } else { -1 };
        let moved = (child.n_conf as isize + step).clamp(1, domain.n_configs.max(1) as isize);
        child.n_conf = moved as usize;
    }
    child
}

/// Core evolution loop over an arbitrary fitness function. Production code
/// wires the power flow and objective in; tests may substitute a surrogate.
pub fn evolve<F>(
    domain: &SearchDomain,
    settings: &GaSettings,
    restrict_to: &[usize],
    initial: Vec<CandidateSolution>,
    fitness: &mut F,
) -> Result<GaResult, GaError>
where
    F: FnMut(&CandidateSolution) -> Result<Evaluation, GaError>,
{
    let restrict = checked_restriction(restrict_to, domain.n_configs)?;
    if initial.len() != settings.population {
        return Err(GaError::PopulationSize {
            got: initial.len(),
            want: settings.population,
        });
    }
    let mut rng = stream_rng(settings.seed, STREAM_EVOLUTION);

    let mut population = initial;
    for ind in &mut population {
        repair(ind, domain, &restrict);
    }
    let mut evals = Vec::with_capacity(population.len());
    for ind in &population {
        evals.push(fitness(ind)?);
    }
    if evals.iter().all(|e| !e.converged) {
        return Err(GaError::AllNonConvergent { generation: 0 });
    }

    let best_of = |evals: &[Evaluation]| -> usize {
        let mut best = 0;
        for (i, e) in evals.iter().enumerate() {
            if e.f < evals[best].f {
                best = i;
            }
        }
        best
    };

    let init_best = best_of(&evals);
    let initial_best_f = evals[init_best].f;
    let initial_best_ploss_w = evals[init_best].p_loss_kw * 1e3;

    let mut history: Vec<GenerationStats> = Vec::new();
    let mut generations_run = 0;

    for generation in 1..=settings.max_generations {
        // Elites: lowest fitness, stable on ties.
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| evals[a].f.partial_cmp(&evals[b].f).unwrap().then(a.cmp(&b)));
        let n_elite = settings.elites.min(population.len());
        let mut next_pop: Vec<CandidateSolution> = Vec::with_capacity(population.len());
        let mut next_evals: Vec<Evaluation> = Vec::with_capacity(population.len());
        for &i in ranked.iter().take(n_elite) {
            next_pop.push(population[i].clone());
            next_evals.push(evals[i]);
        }

        let fitness_values: Vec<f64> = evals.iter().map(|e| e.f).collect();
        let n_children = population.len() - n_elite;
        let n_cross = ((settings.crossover_fraction * n_children as f64).round() as usize)
            .min(n_children);
        for c in 0..n_children {
            let mut child = if c < n_cross {
                let p1 = tournament(&mut rng, &fitness_values);
                let p2 = tournament(&mut rng, &fitness_values);
                blend_crossover(&mut rng, &population[p1], &population[p2])
            } else {
                let p = tournament(&mut rng, &fitness_values);
                mutate(&mut rng, &population[p], domain, settings.mutation_rate)
            };
            repair(&mut child, domain, &restrict);
            next_evals.push(fitness(&child)?);
            next_pop.push(child);
        }

        population = next_pop;
        evals = next_evals;
        generations_run = generation;

        if evals.iter().all(|e| !e.converged) {
            return Err(GaError::AllNonConvergent { generation });
        }

        let best = best_of(&evals);
        let mean_f = evals.iter().map(|e| e.f).sum::<f64>() / evals.len() as f64;
        history.push(GenerationStats {
            generation,
            best_f: evals[best].f,
            mean_f,
            best_ploss_w: evals[best].p_loss_kw * 1e3,
        });

        // Stall: relative change of the best fitness across the window.
        if generation >= settings.stall_generations {
            let prev = if generation == settings.stall_generations {
                initial_best_f
            } else {
                history[generation - settings.stall_generations - 1].best_f
            };
            let now = history[generation - 1].best_f;
            let rel = (prev - now) / prev.abs().max(f64::MIN_POSITIVE);
            if rel <= settings.stall_tol {
                break;
            }
        }
    }

    let best = best_of(&evals);
    let best_f = evals[best].f;
    let best_ploss_w = evals[best].p_loss_kw * 1e3;
    let delta_f_pct = if initial_best_f.abs() > 0.0 {
        (initial_best_f - best_f) / initial_best_f.abs() * 100.0
    } else {
        0.0
    };
    Ok(GaResult {
        best: population[best].clone(),
        best_f,
        best_ploss_w,
        generations_run,
        initial_best_f,
        initial_best_ploss_w,
        delta_f_pct,
        delta_p_loss_w: initial_best_ploss_w - best_ploss_w,
        history,
    })
}

/// Fitness of one candidate on the real network: solve the flow for its
/// configuration and settings, then apply the objective. Non-convergence
/// maps to a sentinel fitness instead of an error so the search can move on.
pub fn power_flow_fitness<'a>(
    model: &'a NetworkModel,
    g: &'a ReducedGraph,
    list: &'a ConfigurationList,
    profiles: &'a HourlyProfiles,
    params: &'a ObjectiveParams,
    sweep: &'a SweepSettings,
) -> impl FnMut(&CandidateSolution) -> Result<Evaluation, GaError> + 'a {
    move |candidate| {
        let conf = list
            .get(candidate.n_conf)
            .expect("repair keeps n_conf within the list");
        let result = solve(model, g, conf, candidate, profiles, sweep)?;
        if !result.converged {
            return Ok(Evaluation {
                f: NONCONVERGED_FITNESS,
                p_loss_kw: 0.0,
                converged: false,
            });
        }
        let breakdown = evaluate(&result, model, params)?;
        Ok(Evaluation {
            f: breakdown.f,
            p_loss_kw: result.p_loss_kw,
            converged: true,
        })
    }
}

/// Run the search with a fresh uniformly sampled initial population.
pub fn run_ga(
    model: &NetworkModel,
    g: &ReducedGraph,
    list: &ConfigurationList,
    profiles: &HourlyProfiles,
    params: &ObjectiveParams,
    settings: &GaSettings,
    restrict_to: &[usize],
) -> Result<GaResult, GaError> {
    let domain = SearchDomain::from_model(model, list.len());
    let initial = build_initial_population(
        settings.population,
        &domain,
        restrict_to,
        None,
        settings.seed,
    )?;
    run_ga_with_initial(model, g, list, profiles, params, settings, restrict_to, initial)
}

/// Run the search from a caller-supplied initial population (used for the
/// paired-population experiment protocol).
#[allow(clippy::too_many_arguments)]
pub fn run_ga_with_initial(
    model: &NetworkModel,
    g: &ReducedGraph,
    list: &ConfigurationList,
    profiles: &HourlyProfiles,
    params: &ObjectiveParams,
    settings: &GaSettings,
    restrict_to: &[usize],
    initial: Vec<CandidateSolution>,
) -> Result<GaResult, GaError> {
    let domain = SearchDomain::from_model(model, list.len());
    let sweep = SweepSettings::default();
    let mut fitness = power_flow_fitness(model, g, list, profiles, params, &sweep);
    evolve(&domain, settings, restrict_to, initial, &mut fitness)
}
