//! Open-loop exploration of the lagged vehicle: how far do zero-mean
//! perturbations of a "drive straight" plan spread the vehicle sideways?
//!
//! Slow actuators low-pass the controls, so white noise mostly cancels out
//! while strongly colored noise keeps steering in one direction long enough
//! to move the vehicle.
//!
//! cargo run --release --example exploration

use colored_mppi::analysis::{exploration_variance, select_coordinate};
use colored_mppi::controller::{rollout_states, ControlSequence};
use colored_mppi::systems::LaggedVehicleState;
use colored_mppi::{LaggedVehicle, Sampler, SamplerConfig, System};

fn main() -> colored_mppi::Result<()> {
    let vehicle = LaggedVehicle::default();
    let (horizon, dt, rollouts) = (250, 0.02, 300);
    let x0 = LaggedVehicleState {
        speed: 5.0,
        ..Default::default()
    }
    .to_vec();
    let nominal = ControlSequence::zeros(horizon, 2).with_bounds(vehicle.control_bounds())?;
    let samplers = [
        ("gaussian σ=0.4", SamplerConfig::Gaussian { sigma: vec![0.4; 2] }),
        ("gaussian σ=2.0", SamplerConfig::Gaussian { sigma: vec![2.0; 2] }),
        ("colored γ=4 σ=0.4", SamplerConfig::colored(vec![0.4; 2], vec![4.0; 2])),
    ];
    println!("{:>18}  lateral variance at t = 1, 2.5, 5 s", "");
    for (name, config) in samplers {
        let batch = Sampler::new(config, horizon)?.draw(rollouts, 2024)?;
        let states = rollout_states(&vehicle, dt, &x0, &nominal, &batch)?;
        let var = exploration_variance(&select_coordinate(&states, 1))?;
        println!("{name:>18}  {:8.3}  {:8.3}  {:8.3}", var[49], var[124], var[horizon - 1]);
    }
    Ok(())
}
