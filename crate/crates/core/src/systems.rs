//! Benchmark plants.
//!
//! [`DoubleIntegrator`] is the 1-D point mass `ẍ = u` with running cost
//! `q(x) = 5(x₀ + 4)² + 0.5x₁²`. [`LaggedVehicle`] is a kinematic bicycle
//! whose steering and throttle reach their commanded values through
//! first-order lags, a small stand-in for a vehicle with slow actuators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Discrete-time plant with a state cost, as used by the rollouts.
pub trait System: Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    /// Advances `state` by one step of length `dt` under `control`.
    fn step(&self, state: &mut [f64], control: &[f64], dt: f64);

    fn running_cost(&self, state: &[f64]) -> f64;

    fn terminal_cost(&self, _state: &[f64]) -> f64 {
        0.0
    }

    /// Per-dimension `(lo, hi)` box on the controls, if any.
    fn control_bounds(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn state_names(&self) -> Vec<String> {
        (0..self.state_dim()).map(|i| format!("x{i}")).collect()
    }

    fn control_names(&self) -> Vec<String> {
        (0..self.control_dim()).map(|i| format!("u{i}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegratorState {
    /// m
    pub position: f64,
    /// m/s
    pub velocity: f64,
}

impl DoubleIntegratorState {
    pub fn new(position: f64, velocity: f64) -> Self {
        Self { position, velocity }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }
}

/// Explicit Euler step: `x₀' = x₀ + x₁·dt`, `x₁' = x₁ + u·dt`.
pub fn double_integrator_step(state: DoubleIntegratorState, u: f64, dt: f64) -> DoubleIntegratorState {
    DoubleIntegratorState {
        position: state.position + state.velocity * dt,
        velocity: state.velocity + u * dt,
    }
}

/// Position the double-integrator cost is centred on.
pub const DOUBLE_INTEGRATOR_TARGET: f64 = -4.0;

/// `q(x) = 5(x₀ + 4)² + 0.5x₁²`.
pub fn double_integrator_cost(state: DoubleIntegratorState) -> f64 {
    let e = state.position - DOUBLE_INTEGRATOR_TARGET;
    5.0 * e * e + 0.5 * state.velocity * state.velocity
}

/// Double integrator with zero terminal cost and unbounded control.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleIntegrator;

impl System for DoubleIntegrator {
    fn state_dim(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        1
    }

    fn step(&self, state: &mut [f64], control: &[f64], dt: f64) {
        let next = double_integrator_step(DoubleIntegratorState::new(state[0], state[1]), control[0], dt);
        state[0] = next.position;
        state[1] = next.velocity;
    }

    fn running_cost(&self, state: &[f64]) -> f64 {
        double_integrator_cost(DoubleIntegratorState::new(state[0], state[1]))
    }

    fn state_names(&self) -> Vec<String> {
        vec!["position".into(), "velocity".into()]
    }

    fn control_names(&self) -> Vec<String> {
        vec!["acceleration".into()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaggedVehicleState {
    pub px: f64,
    pub py: f64,
    /// rad, wrapped to (−π, π]
    pub heading: f64,
    pub speed: f64,
    pub steer_actual: f64,
    pub throttle_actual: f64,
}

impl LaggedVehicleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.px,
            self.py,
            self.heading,
            self.speed,
            self.steer_actual,
            self.throttle_actual,
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            px: s[0],
            py: s[1],
            heading: s[2],
            speed: s[3],
            steer_actual: s[4],
            throttle_actual: s[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaggedVehicleParams {
    /// s
    pub tau_steer: f64,
    /// s
    pub tau_throttle: f64,
    /// m
    pub wheelbase: f64,
    /// rad
    pub max_steer_angle: f64,
    /// m/s² at full throttle
    pub accel_gain: f64,
    /// Goal position for the running cost.
    pub goal: [f64; 2],
    pub position_weight: f64,
    pub speed_weight: f64,
    pub target_speed: f64,
}

impl Default for LaggedVehicleParams {
    fn default() -> Self {
        Self {
            tau_steer: 1.0,
            tau_throttle: 0.4,
            wheelbase: 3.0,
            max_steer_angle: 0.35,
            accel_gain: 4.0,
            goal: [20.0, 10.0],
            position_weight: 1.0,
            speed_weight: 0.5,
            target_speed: 5.0,
        }
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// One step of the lagged kinematic bicycle. Commands are clamped to
/// [−1, 1]; actuators move toward them with time constants `τ`, then speed,
/// heading and position are integrated with the updated values.
pub fn lagged_vehicle_step(
    params: &LaggedVehicleParams,
    state: LaggedVehicleState,
    controls: (f64, f64),
    dt: f64,
) -> LaggedVehicleState {
    let steer_cmd = controls.0.clamp(-1.0, 1.0);
    let throttle_cmd = controls.1.clamp(-1.0, 1.0);
    let lag = |actual: f64, cmd: f64, tau: f64| {
        (actual + (cmd - actual) * (dt / tau).min(1.0)).clamp(-1.0, 1.0)
    };
    let steer = lag(state.steer_actual, steer_cmd, params.tau_steer);
    let throttle = lag(state.throttle_actual, throttle_cmd, params.tau_throttle);
    let speed = state.speed + params.accel_gain * throttle * dt;
    let yaw_rate = state.speed / params.wheelbase * (params.max_steer_angle * steer).tan();
    let heading = wrap_angle(state.heading + yaw_rate * dt);
    LaggedVehicleState {
        px: state.px + speed * heading.cos() * dt,
        py: state.py + speed * heading.sin() * dt,
        heading,
        speed,
        steer_actual: steer,
        throttle_actual: throttle,
    }
}

/// Lagged vehicle driving toward `params.goal` at `params.target_speed`.
/// Controls are `(steer, throttle)`, both in [−1, 1].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LaggedVehicle {
    pub params: LaggedVehicleParams,
}

impl LaggedVehicle {
    pub fn new(params: LaggedVehicleParams) -> Self {
        Self { params }
    }
}

impl System for LaggedVehicle {
    fn state_dim(&self) -> usize {
        6
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn step(&self, state: &mut [f64], control: &[f64], dt: f64) {
        let next = lagged_vehicle_step(
            &self.params,
            LaggedVehicleState::from_slice(state),
            (control[0], control[1]),
            dt,
        );
        state.copy_from_slice(&next.to_vec());
    }

    fn running_cost(&self, state: &[f64]) -> f64 {
        let p = &self.params;
        let dx = state[0] - p.goal[0];
        let dy = state[1] - p.goal[1];
        let dv = state[3] - p.target_speed;
        p.position_weight * (dx * dx + dy * dy) + p.speed_weight * dv * dv
    }

    fn control_bounds(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-1.0, 1.0), (-1.0, 1.0)])
    }

    fn state_names(&self) -> Vec<String> {
        ["px", "py", "heading", "speed", "steer_actual", "throttle_actual"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn control_names(&self) -> Vec<String> {
        vec!["steer".into(), "throttle".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn double_integrator_examples() {
        let s = double_integrator_step(DoubleIntegratorState::new(-9.0, 0.0), 1.0, 0.015);
        assert_eq!(s, DoubleIntegratorState::new(-9.0, 0.015));
        let s = double_integrator_step(DoubleIntegratorState::new(0.0, 2.0), 0.0, 0.5);
        assert_eq!(s, DoubleIntegratorState::new(1.0, 2.0));

        let mut s = DoubleIntegratorState::new(-9.0, 0.0);
        for _ in 0..10 {
            s = double_integrator_step(s, 1.0, 0.015);
        }
        // x1 = 10·u·dt, x0 = −9 + dt·dt·(0 + 1 + … + 9)
        assert_relative_eq!(s.velocity, 0.15, max_relative = 1e-12);
        assert_relative_eq!(s.position, -9.0 + 0.015 * 0.015 * 45.0, max_relative = 1e-12);
    }

    #[test]
    fn double_integrator_cost_examples() {
        assert_eq!(double_integrator_cost(DoubleIntegratorState::new(-4.0, 0.0)), 0.0);
        assert_eq!(double_integrator_cost(DoubleIntegratorState::new(-9.0, 0.0)), 125.0);
        assert_eq!(double_integrator_cost(DoubleIntegratorState::new(0.0, 2.0)), 82.0);
        let sys = DoubleIntegrator;
        assert_eq!(sys.terminal_cost(&[3.0, 1.0]), 0.0);
        assert!(sys.control_bounds().is_none());
    }

    #[test]
    fn vehicle_rest_is_a_fixed_point() {
        let p = LaggedVehicleParams::default();
        let s = lagged_vehicle_step(&p, LaggedVehicleState::default(), (0.0, 0.0), 0.02);
        assert_eq!(s, LaggedVehicleState::default());
    }

    #[test]
    fn steering_lag_first_order_response() {
        let p = LaggedVehicleParams::default();
        let dt = 0.001;
        let mut s = LaggedVehicleState::default();
        let steps = (p.tau_steer / dt).round() as usize;
        for _ in 0..steps {
            s = lagged_vehicle_step(&p, s, (1.0, 0.0), dt);
        }
        // 1 − e^{−1} ≈ 0.632
        assert!((s.steer_actual - 0.632).abs() < 0.002, "{}", s.steer_actual);
    }

    #[test]
    fn full_lock_turn_radius() {
        let p = LaggedVehicleParams::default();
        let dt = 0.001;
        let v = 4.0;
        let mut s = LaggedVehicleState {
            speed: v,
            steer_actual: 1.0,
            ..Default::default()
        };
        let radius = p.wheelbase / p.max_steer_angle.tan();
        let lap = 2.0 * PI * radius / v;
        let steps = (lap / dt).round() as usize;
        let mut max_dist: f64 = 0.0;
        for _ in 0..steps {
            s = lagged_vehicle_step(&p, s, (1.0, 0.0), dt);
            max_dist = max_dist.max(s.px.hypot(s.py));
        }
        assert!((max_dist / (2.0 * radius) - 1.0).abs() < 1e-3, "{max_dist} vs {}", 2.0 * radius);
        assert!(s.px.hypot(s.py) < 0.05 * radius);
        assert_eq!(s.speed, v);
    }

    #[test]
    fn heading_stays_wrapped() {
        for a in [-7.0, -PI, 0.0, PI, 3.5, 100.0] {
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "{a} -> {w}");
            assert_relative_eq!(w.sin(), a.sin(), epsilon = 1e-12);
        }
    }
}
