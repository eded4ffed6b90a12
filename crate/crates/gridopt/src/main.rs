use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridopt::cli::{cmd_enumerate, cmd_optimize, cmd_sample, cmd_screen, RunManifest};
use gridopt::objective::ObjectiveParams;
use gridopt::optimizer::GaSettings;
use gridopt::topology::DEFAULT_ENUMERATION_CAP;

#[derive(Parser)]
#[command(
    name = "gridopt",
    about = "Feeder reconfiguration and power-factor correction toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Network description file (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Hourly profiles CSV.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Hour to simulate, matched exactly against the profile timestamps.
    #[arg(long)]
    hour: Option<String>,
    /// Loss weight in the objective.
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Voltage-violation weight inside the penalty term.
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Random draws per configuration when sampling or screening.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Enumeration safety cap on the number of breakers.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the admissible configurations and write the ordered list.
    Enumerate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classify every configuration as CCC/NCCC/ambiguous and extract
    /// prototypes.
    Screen {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the genetic-algorithm experiments over the seed list.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// 1 = all configurations, 2 = compliant only (needs a prior
        /// screen), both = run the pair.
        #[arg(long, default_value = "both")]
        experiment: String,
        #[arg(long, default_value_t = 20)]
        population: usize,
        #[arg(long, default_value_t = 100)]
        max_gen: usize,
    },
    /// Sample one configuration across the parameter box and dump F, J,
    /// Gamma per draw.
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// 1-based configuration index to sample.
        #[arg(long)]
        n_conf: usize,
    },
}

fn manifest(command: &str, common: &CommonArgs) -> RunManifest {
    RunManifest {
        command: command.into(),
        network: common.network.clone(),
        profiles: common.profiles.clone(),
        hour: common.hour.clone(),
        params: ObjectiveParams {
            alpha: common.alpha,
            beta: common.beta,
            ..ObjectiveParams::default()
        },
        samples: common.samples,
        seeds: common.seeds.clone(),
        out: common.out.clone(),
    }
}

fn run() -> Result<(), gridopt::cli::CliError> {
    match Cli::parse().command {
        Command::Enumerate { common } => {
            cmd_enumerate(&manifest("enumerate", &common), common.cap)?;
        }
        Command::Screen { common } => {
            cmd_screen(&manifest("screen", &common), common.cap)?;
        }
        Command::Optimize {
            common,
            experiment,
            population,
            max_gen,
        } => {
            let settings = GaSettings {
                population,
                max_generations: max_gen,
                ..GaSettings::default()
            };
            let manifest = manifest("optimize", &common);
            match experiment.as_str() {
                "1" => {
                    cmd_optimize(&manifest, 1, &settings, common.cap)?;
                }
                "2" => {
                    cmd_optimize(&manifest, 2, &settings, common.cap)?;
                }
                "both" => {
                    cmd_optimize(&manifest, 1, &settings, common.cap)?;
                    cmd_optimize(&manifest, 2, &settings, common.cap)?;
                }
                other => {
                    return Err(gridopt::cli::CliError::Validation(format!(
                        "--experiment must be 1, 2 or both, got {other:?}"
                    )))
                }
            }
        }
        Command::Sample { common, n_conf } => {
            cmd_sample(&manifest("sample", &common), n_conf, common.cap)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
