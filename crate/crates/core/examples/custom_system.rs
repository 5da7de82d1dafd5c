//! Plugging in your own plant: swing a damped pendulum upright with MPPI.
//!
//! cargo run --release --example custom_system

use std::f64::consts::PI;

use colored_mppi::controller::{MppiConfig, RecedingHorizon, SolverParams};
use colored_mppi::{SamplerConfig, System};

/// θ measured from the downward rest position; torque limited to ±2 N·m.
struct Pendulum;

impl System for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &mut [f64], u: &[f64], dt: f64) {
        let accel = -9.81 * x[0].sin() - 0.1 * x[1] + u[0];
        x[0] += x[1] * dt;
        x[1] += accel * dt;
    }

    fn running_cost(&self, x: &[f64]) -> f64 {
        let upright = 1.0 + x[0].cos();
        10.0 * upright * upright + 0.1 * x[1] * x[1]
    }

    fn control_bounds(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-2.0, 2.0)])
    }
}

fn main() -> colored_mppi::Result<()> {
    let solver = SolverParams::new(1024, 100, 0.02, 1.0);
    for (name, sampler) in [
        ("gaussian", SamplerConfig::Gaussian { sigma: vec![1.0] }),
        ("colored(2)", SamplerConfig::colored(vec![1.0], vec![2.0])),
    ] {
        let log = RecedingHorizon::new(MppiConfig::new(solver.clone(), sampler)).run(&Pendulum, &[0.0, 0.0], 8.0, 1)?;
        let upright = log.states.iter().position(|x| (x[0].rem_euclid(2.0 * PI) - PI).abs() < 0.1);
        println!(
            "{name:>10}: cost {:9.1}, first within 0.1 rad of upright at {}",
            log.accumulated_cost(),
            upright.map_or("never".to_string(), |k| format!("{:.2} s", log.time(k)))
        );
    }
    Ok(())
}
