//! Per-solve cost breakdown: time to draw a 4096 × 65 noise batch and to roll
//! it out on the double integrator, for three samplers.
//!
//! cargo run --release --example bench

use std::time::Instant;

use colored_mppi::controller::{rollout, ControlSequence};
use colored_mppi::{DoubleIntegrator, Sampler, SamplerConfig};

const SAMPLES: usize = 4096;
const HORIZON: usize = 65;
const REPEATS: u64 = 100;

fn main() -> colored_mppi::Result<()> {
    let nominal = ControlSequence::zeros(HORIZON, 1);
    for config in [
        SamplerConfig::Gaussian { sigma: vec![1.0] },
        SamplerConfig::colored(vec![1.0], vec![1.0]),
        SamplerConfig::Nln { sigma: vec![1.0], nln: None },
    ] {
        let sampler = Sampler::new(config.clone(), HORIZON)?;
        let start = Instant::now();
        let mut batch = sampler.draw(SAMPLES, 0)?;
        for seed in 1..REPEATS {
            batch = sampler.draw(SAMPLES, seed)?;
        }
        let draw_ms = start.elapsed().as_secs_f64() * 1e3 / REPEATS as f64;

        let start = Instant::now();
        for _ in 0..REPEATS {
            rollout(&DoubleIntegrator, 0.015, &[-9.0, 0.0], &nominal, &batch)?;
        }
        let rollout_ms = start.elapsed().as_secs_f64() * 1e3 / REPEATS as f64;
        println!("{:>9}: draw {draw_ms:.3} ms, rollout {rollout_ms:.3} ms", config.kind_name());
    }
    Ok(())
}
