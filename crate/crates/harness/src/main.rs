use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbmle::bounds::{
    burn_in_rounds, g0, g1, g1_clamped, g2, glm_regret_bound, linear_regret_bound, BoundParams,
};
use rbmle::environment::{generate_dataset, LinkFunction};
use rbmle::ConfigError;
use rbmle_harness::bench::{bench_csv, bench_scalability, write_bench, BenchConfig, BenchGrid};
use rbmle_harness::config::{ExperimentConfig, PolicySpec};
use rbmle_harness::error::{HarnessError, Result};
use rbmle_harness::output::{summarize_records, summary_csv};
use rbmle_harness::presets::{preset, Preset, PRESET_NAMES};
use rbmle_harness::runner::{run_experiment, ExperimentOutcome, RunOptions};
use rbmle_harness::stats::{parse_levels, DEFAULT_QUANTILES};

#[derive(Parser)]
#[command(
    name = "rbmle",
    version,
    about = "Run RBMLE contextual-bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct RunFlags {
    /// Run trials one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    /// Record every decision time as 0 so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl From<RunFlags> for RunOptions {
    fn from(f: RunFlags) -> Self {
        RunOptions {
            parallel: !f.serial,
            timing: !f.no_timing,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment, building the dataset in --data first if absent.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Summarize final regret from a results directory.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "0.10,0.25,0.50,0.75,0.90,0.95")]
        quantiles: String,
    },
    /// Time per-decision cost over a (d, K) grid.
    Bench {
        #[arg(long, default_value = "d=100,200,300;k=100,200")]
        grid: String,
        #[arg(long = "t", default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 46)]
        seed: u64,
        /// Comma-separated policy names.
        #[arg(long)]
        policies: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the closed-form regret bound.
    Bound {
        #[arg(long, value_parser = ["lin-rbmle", "glm-rbmle"])]
        policy: String,
        #[arg(long = "t")]
        horizon: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Lower bound on the link derivative (defaults from the link).
        #[arg(long)]
        kappa: Option<f64>,
        /// Lipschitz constant of the link (defaults from the link).
        #[arg(long)]
        lmu: Option<f64>,
    },
    /// Write a named config into --out and run it there.
    Preset {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Only write the config.
        #[arg(long)]
        config_only: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let manifest = generate_dataset(&config.data_config(), config.seed, &out)?;
            println!("dataset digest {}", manifest.digest);
            Ok(())
        }
        Command::Run {
            config,
            data,
            out,
            flags,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config, data.as_deref(), &out, flags.into())?;
            report(&outcome, &out)
        }
        Command::Stats { input, quantiles } => {
            let levels = if quantiles.trim().is_empty() {
                DEFAULT_QUANTILES.to_vec()
            } else {
                parse_levels(&quantiles)?
            };
            let summaries = summarize_records(&input, &levels)?;
            summary_csv(&summaries, std::io::stdout().lock()).map_err(|e| HarnessError::Format {
                path: input,
                reason: e.to_string(),
            })
        }
        Command::Bench {
            grid,
            horizon,
            trials,
            seed,
            policies,
            out,
        } => {
            let grid: BenchGrid = grid.parse()?;
            let mut config = BenchConfig::new(grid, horizon, trials, seed);
            if let Some(list) = policies {
                config.policies = list.split(',').map(|n| PolicySpec::new(n.trim())).collect();
            }
            run_bench(&config, &out)
        }
        Command::Bound {
            policy,
            horizon,
            delta,
            d,
            lambda,
            sigma,
            kappa,
            lmu,
        } => bound(&policy, horizon, delta, d, lambda, sigma, kappa, lmu),
        Command::Preset {
            name,
            out,
            config_only,
            flags,
        } => match preset(&name).expect("validated by clap") {
            Preset::Experiment(config) => {
                std::fs::create_dir_all(&out).map_err(HarnessError::io(&out))?;
                let path = out.join("config.toml");
                rbmle::environment::write_atomic(&path, config.to_toml().as_bytes())
                    .map_err(HarnessError::io(&path))?;
                if config_only {
                    return Ok(());
                }
                let outcome = run_experiment(&config, None, &out, flags.into())?;
                report(&outcome, &out)
            }
            Preset::Bench(config) => {
                if config_only {
                    return Ok(());
                }
                run_bench(&config, &out)
            }
        },
    }
}

fn report(outcome: &ExperimentOutcome, out: &Path) -> Result<()> {
    summary_csv(&outcome.summaries(), std::io::stdout().lock()).map_err(|e| {
        HarnessError::Format {
            path: out.to_path_buf(),
            reason: e.to_string(),
        }
    })?;
    for c in outcome.coverage()? {
        println!(
            "bound coverage {}: {}/{} trials (delta = {})",
            c.policy, c.dominated, c.trials, c.delta
        );
    }
    eprintln!("results written to {}", out.display());
    Ok(())
}

fn run_bench(config: &BenchConfig, out: &Path) -> Result<()> {
    let rows = bench_scalability(config)?;
    write_bench(&rows, config, out)?;
    print!("{}", bench_csv(&rows, config));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bound(
    policy: &str,
    horizon: u64,
    delta: f64,
    d: usize,
    lambda: f64,
    sigma: f64,
    kappa: Option<f64>,
    lmu: Option<f64>,
) -> Result<()> {
    if horizon == 0 {
        return Err(ConfigError::new("t", "must be at least 1").into());
    }
    let link = if policy == "glm-rbmle" {
        LinkFunction::logistic()
    } else {
        LinkFunction::identity()
    };
    let mut p = BoundParams::for_link(d, &link);
    p.delta = delta;
    p.lambda = lambda;
    p.sigma = sigma;
    p.kappa_mu = kappa.unwrap_or(p.kappa_mu);
    p.l_mu = lmu.unwrap_or(p.l_mu);
    p.validate()?;
    println!("G0({horizon}) = {}", g0(horizon, &p));
    println!("G1({horizon}) = {}", g1(horizon, &p));
    if g1_clamped(horizon, &p) {
        println!("note: log((lambda + t)/d) < 0, G1 clamped to 0");
    }
    let value = if policy == "glm-rbmle" {
        let t0 = burn_in_rounds(&p).map_err(|e| ConfigError::new("kappa", e.to_string()))?;
        println!("G2({horizon}) = {}", g2(horizon, &p));
        println!("T0 = {t0}");
        glm_regret_bound(horizon, &p).map_err(|e| ConfigError::new("kappa", e.to_string()))?
    } else {
        linear_regret_bound(horizon, &p)
    };
    println!("bound = {value}");
    Ok(())
}
