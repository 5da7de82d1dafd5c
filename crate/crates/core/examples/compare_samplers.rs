//! All six double-integrator controllers at one noise level, repeated with
//! paired seeds, written as CSV artifacts.
//!
//! cargo run --release --example compare_samplers [sigma] [repetitions] [out_dir]

use std::path::PathBuf;

use colored_mppi::controller::SolverParams;
use colored_mppi::experiment::{cmd_run, ExperimentConfig, SamplerEntry, SystemConfig};
use colored_mppi::SamplerConfig;

fn main() -> colored_mppi::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let repetitions: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let out: PathBuf = args.next().unwrap_or_else(|| "out/compare".into()).into();
    let dt = 0.015;
    let entry = |label: &str, sampler| SamplerEntry {
        label: label.into(),
        sampler,
    };
    let config = ExperimentConfig {
        system: SystemConfig::DoubleIntegrator { x0: vec![-9.0, 0.0] },
        controller: SolverParams::new(4096, 65, dt, 1.0),
        samplers: vec![
            entry("gaussian", SamplerConfig::Gaussian { sigma: vec![sigma] }),
            entry("smooth", SamplerConfig::Smooth { sigma: vec![sigma], dt }),
            entry("smooth_star", SamplerConfig::SmoothStar { sigma: vec![sigma], dt }),
            entry("log_mppi", SamplerConfig::Nln { sigma: vec![sigma], nln: None }),
            entry("colored_1", SamplerConfig::colored(vec![sigma], vec![1.0])),
            entry("colored_2", SamplerConfig::colored(vec![sigma], vec![2.0])),
        ],
        duration_seconds: 3.0,
        repetitions,
        seed: 0,
        output_dir: out.clone(),
        analysis_window_seconds: 2.0,
    };
    println!("sigma = {sigma}, {repetitions} repetitions");
    for row in cmd_run(&config)? {
        println!(
            "{:>12}: accumulated cost {:9.1} ± {:7.1}   solve {:.2} ms",
            row.sampler, row.cost_mean, row.cost_std, row.solve_ms_mean
        );
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
