use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use colored_mppi::experiment::{
    cmd_analyze, cmd_run, cmd_sample_noise, cmd_sweep, with_threads, AnalyzeOptions, ExperimentConfig, NoiseRequest,
};
use colored_mppi::Result;

#[derive(Parser)]
#[command(version, about = "MPPI with colored-noise sampling: experiments and artifacts")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Export a raw colored-noise batch with its mean periodogram.
    SampleNoise {
        #[arg(long, default_value_t = 65)]
        horizon: usize,
        /// Exponent per control dimension, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        gamma: Vec<f64>,
        /// Standard deviation per control dimension, or one for all.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        sigma: Vec<f64>,
        #[arg(long)]
        f_min: Option<f64>,
        #[arg(long, short = 'm', default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample period for periodogram frequencies (s).
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Run every sampler of an experiment for its repetitions.
    Run(ExperimentArgs),
    /// Run an experiment once per value of one numeric field.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// sigma, gamma, f_min, lambda, alpha, num_samples, num_iterations,
        /// horizon, dt, duration_seconds, repetitions or seed.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Recompute metrics from the run logs in a directory.
    Analyze {
        dir: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        window_seconds: f64,
        #[arg(long, default_value_t = 20.0)]
        cutoff_hz: f64,
        #[arg(long, default_value_t = 0.5)]
        peak_seconds: f64,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::SampleNoise {
            horizon,
            gamma,
            sigma,
            f_min,
            samples,
            seed,
            dt,
            out,
        } => {
            let request = NoiseRequest {
                horizon,
                gamma,
                sigma,
                f_min,
                samples,
                seed,
                dt,
            };
            for s in cmd_sample_noise(&request, &out)? {
                println!(
                    "dim {} gamma {} sigma {}: variance {:.4}, lag-1 autocorrelation {:.4}, mean |Δz| {:.4}",
                    s.dim, s.gamma, s.sigma, s.variance, s.lag1_autocorrelation, s.mean_abs_difference
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Run(args) => {
            let config = args.load()?;
            for row in cmd_run(&config)? {
                println!(
                    "{:>16}  cost {:.1} ± {:.1}  ok {} failed {}  solve {:.3} ± {:.3} ms",
                    row.sampler, row.cost_mean, row.cost_std, row.reps_ok, row.reps_failed, row.solve_ms_mean, row.solve_ms_std
                );
            }
            println!("wrote {}", config.output_dir.display());
        }
        Command::Sweep {
            experiment,
            axis,
            values,
        } => {
            let config = experiment.load()?;
            for row in cmd_sweep(&config, &axis, &values)? {
                let s = &row.summary;
                println!(
                    "{}={:<8} {:>16}  cost {:.1} ± {:.1}  failed {}",
                    row.axis, row.value, s.sampler, s.cost_mean, s.cost_std, s.reps_failed
                );
            }
            println!("wrote {}", config.output_dir.join("sweep_summary.csv").display());
        }
        Command::Analyze {
            dir,
            window_seconds,
            cutoff_hz,
            peak_seconds,
        } => {
            let options = AnalyzeOptions {
                window_seconds,
                cutoff_hz,
                peak_seconds,
            };
            for row in cmd_analyze(&dir, &options)? {
                println!(
                    "{:>16}  reps {}  cost {:.1} ± {:.1}  power>{cutoff_hz}Hz {:.4e}  peak|u| {:.3}",
                    row.sampler, row.reps, row.cost_mean, row.cost_std, row.high_freq_power, row.peak_abs_control
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_threads(cli.threads, || execute(cli.command)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
