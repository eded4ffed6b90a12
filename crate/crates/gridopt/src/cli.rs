//! Command implementations behind the binary: enumerate, screen, optimize,
//! and sample. Every command resolves its inputs into a manifest, writes its
//! artifacts under the output directory, and is byte-for-byte reproducible
//! from (inputs, seed).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{load_network, ModelError, NetworkModel};
use crate::objective::ObjectiveParams;
use crate::optimizer::{
    build_initial_population, run_ga_with_initial, GaError, GaResult, GaSettings,
};
use crate::profiles::{load_profiles, HourlyProfiles, ProfileError};
use crate::screening::{
    per_tap_means, prototype_report, sample_configuration, screen_all, SamplingSettings,
    ScreeningError,
};
use crate::solution::SearchDomain;
use crate::stats::{mean_std, sample_std, welch_p_value};
use crate::topology::{
    enumerate_admissible_with_cap, order_by_hamming, reduce_graph, ConfigurationList,
    TopologyError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    MissingArtifact(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Convergence(_) => 2,
            CliError::MissingArtifact(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ScreeningError> for CliError {
    fn from(e: ScreeningError) -> Self {
        match e {
            ScreeningError::PowerFlow(inner) => CliError::Convergence(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<GaError> for CliError {
    fn from(e: GaError) -> Self {
        match e {
            GaError::AllNonConvergent { .. } | GaError::PowerFlow(_) => {
                CliError::Convergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {}", path.display(), e))
}

/// Resolved inputs and knobs of one invocation, embedded in the reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub network: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hour: Option<String>,
    pub params: ObjectiveParams,
    pub samples: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

pub struct LoadedInputs {
    pub model: NetworkModel,
    pub profiles: Option<HourlyProfiles>,
    pub graph: crate::topology::ReducedGraph,
    pub list: ConfigurationList,
}

pub fn load_inputs(manifest: &RunManifest, cap: usize) -> Result<LoadedInputs, CliError> {
    let model = load_network(&manifest.network)?;
    let profiles = match (&manifest.profiles, &manifest.hour) {
        (Some(path), Some(hour)) => {
            let p = load_profiles(path, hour)?;
            p.validate_against(&model)?;
            Some(p)
        }
        (None, None) => None,
        _ => {
            return Err(CliError::Validation(
                "profiles and hour must be given together".into(),
            ))
        }
    };
    let graph = reduce_graph(&model);
    let list = order_by_hamming(&enumerate_admissible_with_cap(&graph, cap)?)?;
    Ok(LoadedInputs {
        model,
        profiles,
        graph,
        list,
    })
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report types");
    text.push('\n');
    text
}

/// Write the ordered admissible-configuration list.
pub fn cmd_enumerate(manifest: &RunManifest, cap: usize) -> Result<PathBuf, CliError> {
    let inputs = load_inputs(manifest, cap)?;
    let path = manifest.out.join("configurations.json");
    write_out(&path, &to_pretty_json(&inputs.list.configurations))?;
    println!(
        "{} nodes, {} breakers, {} admissible configurations -> {}",
        inputs.graph.nodes.len(),
        inputs.graph.edges.len(),
        inputs.list.len(),
        path.display()
    );
    Ok(path)
}

/// Screen every configuration and extract the class prototypes.
pub fn cmd_screen(manifest: &RunManifest, cap: usize) -> Result<(), CliError> {
    let inputs = load_inputs(manifest, cap)?;
    let profiles = inputs
        .profiles
        .as_ref()
        .ok_or_else(|| CliError::Validation("screen needs --profiles and --hour".into()))?;
    let sampling = SamplingSettings {
        samples: manifest.samples,
        ..SamplingSettings::default()
    };
    let seed = *manifest.seeds.first().unwrap_or(&0);
    let (partition, reports) = screen_all(
        &inputs.model,
        &inputs.graph,
        &inputs.list,
        profiles,
        &manifest.params,
        &sampling,
        seed,
    )?;

    let mut csv = String::from(
        "n_conf,class,mean_f,std_f,eta,j_max,gamma_max,feasible_fraction,excluded\n",
    );
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n_conf,
            r.class,
            r.mean_f,
            r.std_f,
            r.eta,
            r.j_max,
            r.gamma_max,
            r.feasible_fraction,
            r.excluded
        ));
    }
    write_out(&manifest.out.join("screening.csv"), &csv)?;

    println!(
        "{} configurations: {} CCC, {} NCCC, {} ambiguous",
        inputs.list.len(),
        partition.ccc.len(),
        partition.nccc.len(),
        partition.ambiguous.len()
    );

    match prototype_report(&partition, &inputs.list, &inputs.model, &inputs.graph) {
        Ok(protos) => {
            write_out(&manifest.out.join("prototypes.json"), &to_pretty_json(&protos))?;
            println!(
                "prototypes: CCC #{} (depth {}), NCCC #{} (depth {})",
                protos.ccc.n_conf,
                protos.ccc.stats.max_depth,
                protos.nccc.n_conf,
                protos.nccc.stats.max_depth
            );
        }
        Err(ScreeningError::EmptyClass(class)) => {
            println!("no {class} configurations; prototypes.json not written");
        }
        Err(other) => return Err(other.into()),
    }
    Ok(())
}

/// Read the compliant indices back from a screening artifact.
pub fn read_ccc_indices(out: &Path) -> Result<Vec<usize>, CliError> {
    let path = out.join("screening.csv");
    let text = fs::read_to_string(&path).map_err(|_| {
        CliError::MissingArtifact(format!(
            "{} not found; run the screen command first",
            path.display()
        ))
    })?;
    let mut ccc = Vec::new();
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let (Some(idx), Some(class)) = (fields.next(), fields.next()) else {
            continue;
        };
        if class == "CCC" {
            ccc.push(idx.parse::<usize>().map_err(|_| {
                CliError::Validation(format!("bad index {idx:?} in {}", path.display()))
            })?);
        }
    }
    Ok(ccc)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub experiment: u8,
    pub settings: GaSettings,
    pub result: GaResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: u8,
    pub seeds: Vec<u64>,
    pub generations_mean: f64,
    pub generations_std: f64,
    pub delta_f_pct_mean: f64,
    pub delta_f_pct_std: f64,
    pub delta_p_loss_w_mean: f64,
    pub delta_p_loss_w_std: f64,
    pub final_p_loss_w_mean: f64,
    pub final_p_loss_w_std: f64,
    pub per_seed_generations: Vec<f64>,
    pub per_seed_delta_f_pct: Vec<f64>,
    pub per_seed_delta_p_loss_w: Vec<f64>,
    pub per_seed_final_p_loss_w: Vec<f64>,
}

fn summarize(experiment: u8, seeds: &[u64], results: &[GaResult]) -> ExperimentSummary {
    let generations: Vec<f64> = results.iter().map(|r| r.generations_run as f64).collect();
    let delta_f: Vec<f64> = results.iter().map(|r| r.delta_f_pct).collect();
    let delta_p: Vec<f64> = results.iter().map(|r| r.delta_p_loss_w).collect();
    let final_p: Vec<f64> = results.iter().map(|r| r.best_ploss_w).collect();
    ExperimentSummary {
        experiment,
        seeds: seeds.to_vec(),
        generations_mean: mean_std(&generations).0,
        generations_std: sample_std(&generations),
        delta_f_pct_mean: mean_std(&delta_f).0,
        delta_f_pct_std: sample_std(&delta_f),
        delta_p_loss_w_mean: mean_std(&delta_p).0,
        delta_p_loss_w_std: sample_std(&delta_p),
        final_p_loss_w_mean: mean_std(&final_p).0,
        final_p_loss_w_std: sample_std(&final_p),
        per_seed_generations: generations,
        per_seed_delta_f_pct: delta_f,
        per_seed_delta_p_loss_w: delta_p,
        per_seed_final_p_loss_w: final_p,
    }
}

fn history_csv(result: &GaResult) -> String {
    let mut csv = String::from("generation,best_f,mean_f,best_ploss_w\n");
    for g in &result.history {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            g.generation, g.best_f, g.mean_f, g.best_ploss_w
        ));
    }
    csv
}

/// Run one experiment (1 = all admissible configurations, 2 = compliant
/// only) over the whole seed list with paired initial populations, and write
/// per-seed reports plus the summary.
pub fn cmd_optimize(
    manifest: &RunManifest,
    experiment: u8,
    settings: &GaSettings,
    cap: usize,
) -> Result<ExperimentSummary, CliError> {
    if manifest.seeds.is_empty() {
        return Err(CliError::Validation("optimize needs at least one seed".into()));
    }
    let inputs = load_inputs(manifest, cap)?;
    let profiles = inputs
        .profiles
        .as_ref()
        .ok_or_else(|| CliError::Validation("optimize needs --profiles and --hour".into()))?;
    if inputs.list.is_empty() {
        return Err(CliError::Validation("no admissible configurations".into()));
    }

    let full: Vec<usize> = (1..=inputs.list.len()).collect();
    let restrict: Vec<usize> = match experiment {
        1 => full.clone(),
        2 => {
            let ccc = read_ccc_indices(&manifest.out)?;
            if ccc.is_empty() {
                return Err(CliError::Validation(
                    "screening artifact lists no compliant configurations".into(),
                ));
            }
            ccc
        }
        other => {
            return Err(CliError::Validation(format!(
                "experiment must be 1 or 2, got {other}"
            )))
        }
    };

    let domain = SearchDomain::from_model(&inputs.model, inputs.list.len());
    let mut results = Vec::new();
    for &seed in &manifest.seeds {
        let settings = GaSettings {
            seed,
            ..settings.clone()
        };
        // The paired protocol: experiment 2 reuses experiment 1's initial
        // population, resampling only the individuals outside the
        // restriction. Both sides are regenerated from the seed alone.
        let base = build_initial_population(settings.population, &domain, &full, None, seed)?;
        let initial = if experiment == 1 {
            base
        } else {
            build_initial_population(settings.population, &domain, &restrict, Some(&base), seed)?
        };
        let result = run_ga_with_initial(
            &inputs.model,
            &inputs.graph,
            &inputs.list,
            profiles,
            &manifest.params,
            &settings,
            &restrict,
            initial,
        )?;
        let report = RunReport {
            manifest: manifest.clone(),
            experiment,
            settings: settings.clone(),
            result,
        };
        write_out(
            &manifest
                .out
                .join(format!("run_report_exp{experiment}_seed{seed}.json")),
            &to_pretty_json(&report),
        )?;
        write_out(
            &manifest
                .out
                .join(format!("history_exp{experiment}_seed{seed}.csv")),
            &history_csv(&report.result),
        )?;
        results.push(report.result);
    }

    let summary = summarize(experiment, &manifest.seeds, &results);
    write_out(
        &manifest.out.join(format!("summary_exp{experiment}.json")),
        &to_pretty_json(&summary),
    )?;
    print_summary(&summary);

    // When the other experiment has already been run into the same output
    // directory, compare the power-loss reductions.
    let other: u8 = if experiment == 1 { 2 } else { 1 };
    let other_path = manifest.out.join(format!("summary_exp{other}.json"));
    if let Ok(text) = fs::read_to_string(&other_path) {
        if let Ok(other_summary) = serde_json::from_str::<ExperimentSummary>(&text) {
            write_comparison(manifest, &summary, &other_summary)?;
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentComparison {
    pub exp1_delta_p_loss_w_mean: f64,
    pub exp2_delta_p_loss_w_mean: f64,
    pub exp1_final_p_loss_w_mean: f64,
    pub exp2_final_p_loss_w_mean: f64,
    /// Two-sided Welch t-test over the per-seed power-loss reductions.
    pub welch_p_delta_p_loss: Option<f64>,
}

fn write_comparison(
    manifest: &RunManifest,
    a: &ExperimentSummary,
    b: &ExperimentSummary,
) -> Result<(), CliError> {
    let (one, two) = if a.experiment == 1 { (a, b) } else { (b, a) };
    let comparison = ExperimentComparison {
        exp1_delta_p_loss_w_mean: one.delta_p_loss_w_mean,
        exp2_delta_p_loss_w_mean: two.delta_p_loss_w_mean,
        exp1_final_p_loss_w_mean: one.final_p_loss_w_mean,
        exp2_final_p_loss_w_mean: two.final_p_loss_w_mean,
        welch_p_delta_p_loss: welch_p_value(
            &one.per_seed_delta_p_loss_w,
            &two.per_seed_delta_p_loss_w,
        ),
    };
    write_out(&manifest.out.join("comparison.json"), &to_pretty_json(&comparison))?;
    if let Some(p) = comparison.welch_p_delta_p_loss {
        println!(
            "delta_P_loss: exp1 {:.1} W vs exp2 {:.1} W (Welch p = {:.4})",
            comparison.exp1_delta_p_loss_w_mean, comparison.exp2_delta_p_loss_w_mean, p
        );
    }
    Ok(())
}

fn print_summary(summary: &ExperimentSummary) {
    println!("Experiment {} over {} seeds:", summary.experiment, summary.seeds.len());
    println!(
        "  # gen              {:.2} +- {:.2}",
        summary.generations_mean, summary.generations_std
    );
    println!(
        "  delta_F [%]        {:.4} +- {:.4}",
        summary.delta_f_pct_mean, summary.delta_f_pct_std
    );
    println!(
        "  delta_P_loss [W]   {:.2} +- {:.2}",
        summary.delta_p_loss_w_mean, summary.delta_p_loss_w_std
    );
}

/// Sample one configuration and dump the per-draw objective values.
pub fn cmd_sample(manifest: &RunManifest, n_conf: usize, cap: usize) -> Result<(), CliError> {
    let inputs = load_inputs(manifest, cap)?;
    let profiles = inputs
        .profiles
        .as_ref()
        .ok_or_else(|| CliError::Validation("sample needs --profiles and --hour".into()))?;
    let sampling = SamplingSettings {
        samples: manifest.samples,
        ..SamplingSettings::default()
    };
    let seed = *manifest.seeds.first().unwrap_or(&0);
    let report = sample_configuration(
        &inputs.model,
        &inputs.graph,
        &inputs.list,
        profiles,
        n_conf,
        &manifest.params,
        &sampling,
        seed,
    )?;

    let mut csv = String::from("sample,n_tap,f,j,gamma\n");
    for (i, d) in report.draws.iter().enumerate() {
        csv.push_str(&format!("{},{},{},{},{}\n", i + 1, d.n_tap, d.f, d.j, d.gamma));
    }
    write_out(&manifest.out.join("samples.csv"), &csv)?;

    println!(
        "configuration {}: class {}, mean F = {}, eta = {}, excluded = {}",
        report.n_conf, report.class, report.mean_f, report.eta, report.excluded
    );
    if let Some(norm) = report.normalization(manifest.params.alpha) {
        println!(
            "  observed J_max = {}, Gamma_max = {}, effective alpha = {:.6}",
            norm.j_max, norm.gamma_max, norm.alpha_eq
        );
    }
    for (tap, mean, count) in per_tap_means(&report) {
        println!("  tap {tap:+}: mean F = {mean} over {count} draws");
    }
    Ok(())
}
