//! One closed-loop run on the double integrator from x = (−9, 0) with
//! Gaussian and colored sampling.
//!
//! cargo run --release --example double_integrator [sigma]

use colored_mppi::analysis::periodogram;
use colored_mppi::controller::{receding_horizon_run, MppiConfig, SolverParams};
use colored_mppi::{DoubleIntegrator, SamplerConfig};

fn main() -> colored_mppi::Result<()> {
    let sigma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let solver = SolverParams::new(4096, 65, 0.015, 1.0);
    let samplers = [
        ("gaussian", SamplerConfig::Gaussian { sigma: vec![sigma] }),
        ("colored(1)", SamplerConfig::colored(vec![sigma], vec![1.0])),
        ("colored(2)", SamplerConfig::colored(vec![sigma], vec![2.0])),
    ];
    for (name, sampler) in samplers {
        let config = MppiConfig::new(solver.clone(), sampler);
        let log = receding_horizon_run(&config, &DoubleIntegrator, &[-9.0, 0.0], 3.0, 7)?;
        let u = log.control_series(0);
        let peak = u[..33].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let psd = periodogram(&u[..133], log.dt)?;
        let last = log.states.last().expect("non-empty run");
        println!(
            "{name:>10}: cost {:8.1}  final x = ({:+.3}, {:+.3})  peak |u| in 0.5 s {:6.2}  power > 20 Hz {:.3e}",
            log.accumulated_cost(),
            last[0],
            last[1],
            peak,
            psd.mean_power_above(20.0).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
