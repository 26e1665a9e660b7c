use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use atb::env::{EnvSpec, Environment, NoiseModel};
use atb::harness::{
    default_horizons, report_from_dir, run_experiment, AggregateReport, ExperimentConfig,
    StrategySpec,
};
use atb::Result;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "atb", version, about = "Adaptive tree-partition bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Deterministic,
    Bernoulli,
    TruncatedGaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Atb,
    Ucb1,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration, from a JSON file or from flags.
    Run {
        #[arg(long, conflicts_with_all = ["env", "horizon"])]
        config: Option<PathBuf>,
        /// quadratic, quartic, mixed, linear, constant, log-peak, exp-flat, mixed-exponent
        #[arg(long)]
        env: Option<String>,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_enum, default_value = "bernoulli")]
        noise: Noise,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "atb")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Quality; `1 / ln T` when omitted.
        #[arg(long)]
        gamma: Option<f64>,
        /// Grid size for ucb1.
        #[arg(long)]
        arms: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long)]
        check_clean: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (seed, horizon) pair of a JSON configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configuration's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate the trajectory CSVs of an output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fit_slope: bool,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

fn print_report(report: &AggregateReport, fit: bool) -> Result<()> {
    println!("strategy {}", report.strategy);
    println!("horizon runs median_R_T median_S_T");
    for h in &report.horizons {
        println!(
            "{} {} {:.6} {:.6}",
            h.horizon, h.runs, h.regret_median, h.simple_median
        );
    }
    if let Some(c) = report.clean_fraction {
        println!("clean fraction {c:.4}");
    }
    if fit {
        match report.regret_slope {
            Some(f) => println!("R_T slope {:.4} ± {:.4}", f.slope, 1.96 * f.std_error),
            None => println!("R_T slope unavailable (needs 3 horizons with positive medians)"),
        }
        match report.simple_regret_slope {
            Some(f) => println!("S_T slope {:.4} ± {:.4}", f.slope, 1.96 * f.std_error),
            None => println!("S_T slope unavailable (needs 3 horizons with positive medians)"),
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config: Some(path),
            out,
            ..
        } => {
            let mut config = load_config(&path)?;
            if out.is_some() {
                config.out = out;
            }
            print_report(&run_experiment(&config)?, false)
        }
        Command::Run {
            config: None,
            env,
            p,
            noise,
            sigma,
            strategy,
            epsilon,
            gamma,
            arms,
            horizon,
            seed,
            master_seed,
            check_clean,
            out,
        } => {
            let noise = match noise {
                Noise::Deterministic => NoiseModel::Deterministic,
                Noise::Bernoulli => NoiseModel::Bernoulli,
                Noise::TruncatedGaussian => NoiseModel::TruncatedGaussian { sigma },
            };
            let name = env.unwrap_or_else(|| "quadratic".into());
            let environment = Environment::named(&name, p, noise)?;
            let strategy = match strategy {
                Strategy::Atb => StrategySpec::Atb { epsilon, gamma },
                Strategy::Ucb1 => StrategySpec::Ucb1 { arms },
                Strategy::Uniform => StrategySpec::Uniform,
            };
            let config = ExperimentConfig {
                environment: EnvSpec {
                    reward: environment.reward.spec().clone(),
                    noise,
                },
                trees: None,
                strategy,
                horizons: horizon.map_or_else(default_horizons, |h| vec![h]),
                seeds: vec![seed],
                master_seed,
                out,
                workers: None,
                check_clean,
                write_trajectories: true,
            };
            print_report(&run_experiment(&config)?, false)
        }
        Command::Sweep { config, out } => {
            let mut config = load_config(&config)?;
            if out.is_some() {
                config.out = out;
            }
            print_report(&run_experiment(&config)?, true)
        }
        Command::Report { input, fit_slope } => {
            let report = report_from_dir(&input)?;
            fs::write(
                input.join("summary.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            print_report(&report, fit_slope)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("atb: error: {e}");
            ExitCode::FAILURE
        }
    }
}
