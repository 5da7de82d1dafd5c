//! MPPI solver and receding-horizon driver.
//!
//! One solver iteration draws a noise batch around the current mean, rolls
//! every perturbed control sequence through the plant, turns the costs into
//! softmax weights (after subtracting the minimum cost) and moves the mean by
//! the weighted average of the noise:
//!
//! ```text
//! J^m = Σ_t q(x_t^m) + φ(x_T^m)
//! w_m = exp(−(J^m − ρ)/λ) / η,   ρ = min J,  η = Σ exp(−(J^m − ρ)/λ)
//! U_t ← U_t + α·Σ_m w_m z^m(t)
//! ```

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseBatch;
use crate::samplers::{Sampler, SamplerConfig};
use crate::seed;
use crate::systems::System;

/// Solver hyperparameters shared by all samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub num_samples: usize,
    #[serde(default = "default_iterations")]
    pub num_iterations: usize,
    pub horizon: usize,
    /// s
    pub dt: f64,
    /// Inverse temperature.
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Optional step decay: iteration `k` uses `α / (1 + decay·k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_decay: Option<f64>,
    /// How the vacated last step is filled when the horizon shifts.
    #[serde(default)]
    pub warm_start: WarmStart,
}

/// Fill policy for the last step of a shifted control sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Reset the last step to zero control.
    #[default]
    Zero,
    /// Repeat the previous last step.
    RepeatLast,
}

/// Shifts a row-major `T × width` buffer up one row and fills the last row.
pub(crate) fn shift_rows(values: &mut [f64], width: usize, fill: WarmStart) {
    let len = values.len();
    if len > width {
        values.copy_within(width.., 0);
        if fill == WarmStart::Zero {
            values[len - width..].iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

fn default_iterations() -> usize {
    1
}

fn default_alpha() -> f64 {
    1.0
}

impl SolverParams {
    /// One iteration, `α = 1`, no decay, zero-filled warm start.
    pub fn new(num_samples: usize, horizon: usize, dt: f64, lambda: f64) -> Self {
        Self {
            num_samples,
            num_iterations: default_iterations(),
            horizon,
            dt,
            lambda,
            alpha: default_alpha(),
            alpha_decay: None,
            warm_start: WarmStart::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_samples == 0 {
            return fail("num_samples must be at least 1".into());
        }
        if self.num_iterations == 0 {
            return fail("num_iterations must be at least 1".into());
        }
        if self.horizon < 2 {
            return fail(format!("horizon must be at least 2, got {}", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if let Some(d) = self.alpha_decay {
            if !(d >= 0.0 && d.is_finite()) {
                return fail(format!("alpha_decay must be nonnegative, got {d}"));
            }
        }
        Ok(())
    }

    /// Step size of iteration `k` (0-based).
    pub fn step_size(&self, k: usize) -> f64 {
        match self.alpha_decay {
            Some(d) => self.alpha / (1.0 + d * k as f64),
            None => self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppiConfig {
    #[serde(flatten)]
    pub solver: SolverParams,
    pub sampler: SamplerConfig,
}

impl MppiConfig {
    pub fn new(solver: SolverParams, sampler: SamplerConfig) -> Self {
        Self { solver, sampler }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.sampler.validate()
    }
}

/// `T × n_u` control trajectory with optional per-dimension box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    horizon: usize,
    control_dim: usize,
    values: Vec<f64>,
    bounds: Option<Vec<(f64, f64)>>,
}

impl ControlSequence {
    pub fn zeros(horizon: usize, control_dim: usize) -> Self {
        Self {
            horizon,
            control_dim,
            values: vec![0.0; horizon * control_dim],
            bounds: None,
        }
    }

    pub fn from_values(horizon: usize, control_dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != horizon * control_dim {
            return Err(Error::ShapeMismatch {
                what: "control sequence values",
                expected: horizon * control_dim,
                actual: values.len(),
            });
        }
        Ok(Self {
            horizon,
            control_dim,
            values,
            bounds: None,
        })
    }

    /// Attaches bounds and clamps the current values into them.
    pub fn with_bounds(mut self, bounds: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if let Some(b) = &bounds {
            if b.len() != self.control_dim {
                return Err(Error::ShapeMismatch {
                    what: "control bounds",
                    expected: self.control_dim,
                    actual: b.len(),
                });
            }
            if let Some((lo, hi)) = b.iter().find(|(lo, hi)| !(lo <= hi)) {
                return Err(Error::InvalidConfig(format!("empty control bound [{lo}, {hi}]")));
            }
        }
        self.bounds = bounds;
        self.clamp();
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn get(&self, t: usize, dim: usize) -> f64 {
        self.values[t * self.control_dim + dim]
    }

    /// Control at step `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        &self.values[t * self.control_dim..(t + 1) * self.control_dim]
    }

    fn clamp(&mut self) {
        if let Some(bounds) = &self.bounds {
            for row in self.values.chunks_exact_mut(self.control_dim) {
                for (v, (lo, hi)) in row.iter_mut().zip(bounds) {
                    *v = v.clamp(*lo, *hi);
                }
            }
        }
    }

    /// Warm start for the next control step: drop the first entry and fill
    /// the last according to `fill` (clamped into the bounds).
    pub fn shift(&mut self, fill: WarmStart) {
        shift_rows(&mut self.values, self.control_dim, fill);
        self.clamp();
    }
}

fn clamp_into(control: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(bounds) = bounds {
        for (v, (lo, hi)) in control.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Trajectory costs and the softmax weights derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutCosts {
    pub costs: Vec<f64>,
    /// Minimum cost (baseline).
    pub rho: f64,
    /// Normalizer.
    pub eta: f64,
    pub weights: Vec<f64>,
}

fn check_batch_shape(nominal: &ControlSequence, noise: &NoiseBatch) -> Result<()> {
    if noise.horizon() != nominal.horizon {
        return Err(Error::ShapeMismatch {
            what: "noise horizon",
            expected: nominal.horizon,
            actual: noise.horizon(),
        });
    }
    if noise.control_dim() != nominal.control_dim {
        return Err(Error::ShapeMismatch {
            what: "noise control dimension",
            expected: nominal.control_dim,
            actual: noise.control_dim(),
        });
    }
    Ok(())
}

/// Cost of every perturbed trajectory `v_t = clamp(u_t + z^m(t))` from `x0`.
/// Samples whose state or cost turns non-finite get `+∞`.
pub fn rollout<S: System + ?Sized>(
    system: &S,
    dt: f64,
    x0: &[f64],
    nominal: &ControlSequence,
    noise: &NoiseBatch,
) -> Result<Vec<f64>> {
    check_batch_shape(nominal, noise)?;
    if x0.len() != system.state_dim() {
        return Err(Error::ShapeMismatch {
            what: "initial state",
            expected: system.state_dim(),
            actual: x0.len(),
        });
    }
    if nominal.control_dim != system.control_dim() {
        return Err(Error::ShapeMismatch {
            what: "control dimension",
            expected: system.control_dim(),
            actual: nominal.control_dim,
        });
    }
    let n_u = nominal.control_dim;
    let bounds = nominal.bounds();
    let costs: Vec<f64> = (0..noise.samples())
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || (vec![0.0; x0.len()], vec![0.0; n_u]),
            |(x, v), m| {
                x.copy_from_slice(x0);
                let z = noise.sample(m);
                let mut cost = 0.0;
                for t in 0..nominal.horizon {
                    let u = &nominal.values[t * n_u..(t + 1) * n_u];
                    for ((vd, ud), zd) in v.iter_mut().zip(u).zip(&z[t * n_u..(t + 1) * n_u]) {
                        *vd = ud + zd;
                    }
                    clamp_into(v, bounds);
                    system.step(x, v, dt);
                    cost += system.running_cost(x);
                }
                cost += system.terminal_cost(x);
                if cost.is_finite() && x.iter().all(|s| s.is_finite()) {
                    cost
                } else {
                    f64::INFINITY
                }
            },
        )
        .collect();
    if costs.iter().all(|c| !c.is_finite()) {
        return Err(Error::AllCostsNonFinite);
    }
    Ok(costs)
}

/// State trajectories (excluding `x0`) of every perturbed control sequence.
pub fn rollout_states<S: System + ?Sized>(
    system: &S,
    dt: f64,
    x0: &[f64],
    nominal: &ControlSequence,
    noise: &NoiseBatch,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_batch_shape(nominal, noise)?;
    let n_u = nominal.control_dim;
    let bounds = nominal.bounds();
    Ok((0..noise.samples())
        .into_par_iter()
        .map(|m| {
            let mut x = x0.to_vec();
            let mut v = vec![0.0; n_u];
            let z = noise.sample(m);
            (0..nominal.horizon)
                .map(|t| {
                    for d in 0..n_u {
                        v[d] = nominal.values[t * n_u + d] + z[t * n_u + d];
                    }
                    clamp_into(&mut v, bounds);
                    system.step(&mut x, &v, dt);
                    x.clone()
                })
                .collect()
        })
        .collect())
}

/// Softmax weights with the minimum cost subtracted. Non-finite costs get
/// weight zero.
pub fn compute_weights(costs: &[f64], lambda: f64) -> Result<RolloutCosts> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    let rho = costs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !rho.is_finite() {
        return Err(Error::AllCostsNonFinite);
    }
    let mut weights: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if c.is_finite() {
                (-(c - rho) / lambda).exp()
            } else {
                0.0
            }
        })
        .collect();
    let eta: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= eta);
    Ok(RolloutCosts {
        costs: costs.to_vec(),
        rho,
        eta,
        weights,
    })
}

/// `U_t = u_t + α·Σ_m w_m z^m(t)`, clamped to the nominal's bounds.
pub fn update_mean(
    nominal: &ControlSequence,
    weights: &[f64],
    noise: &NoiseBatch,
    alpha: f64,
) -> Result<ControlSequence> {
    check_batch_shape(nominal, noise)?;
    if weights.len() != noise.samples() {
        return Err(Error::ShapeMismatch {
            what: "weights",
            expected: noise.samples(),
            actual: weights.len(),
        });
    }
    let mut step = vec![0.0; nominal.values.len()];
    for (m, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (s, z) in step.iter_mut().zip(noise.sample(m)) {
            *s += w * z;
        }
    }
    let mut next = nominal.clone();
    for (u, s) in next.values.iter_mut().zip(&step) {
        *u += alpha * s;
    }
    next.clamp();
    Ok(next)
}

/// MPPI optimizer holding a sampler (and its state) across calls.
#[derive(Debug, Clone)]
pub struct Mppi {
    config: MppiConfig,
    sampler: Sampler,
}

impl Mppi {
    pub fn new(config: MppiConfig) -> Result<Self> {
        config.validate()?;
        let sampler = Sampler::new(config.sampler.clone(), config.solver.horizon)?;
        Ok(Self { config, sampler })
    }

    pub fn config(&self) -> &MppiConfig {
        &self.config
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// Runs `I` iterations of draw → rollout → weights → mean update and
    /// returns the final mean. Iteration `k` draws with seed
    /// `derive(seed, k)`.
    pub fn optimize<S: System + ?Sized>(
        &mut self,
        system: &S,
        x0: &[f64],
        nominal: &ControlSequence,
        seed: u64,
    ) -> Result<ControlSequence> {
        let solver = &self.config.solver;
        if nominal.horizon != solver.horizon {
            return Err(Error::ShapeMismatch {
                what: "nominal horizon",
                expected: solver.horizon,
                actual: nominal.horizon,
            });
        }
        if nominal.control_dim != self.sampler.control_dim() {
            return Err(Error::ShapeMismatch {
                what: "sampler dimensions",
                expected: nominal.control_dim,
                actual: self.sampler.control_dim(),
            });
        }
        let mut mean = nominal.clone();
        for k in 0..solver.num_iterations {
            let noise = self.sampler.draw(solver.num_samples, seed::derive(seed, k as u64))?;
            let costs = rollout(system, solver.dt, x0, &mean, &noise)?;
            let weighted = compute_weights(&costs, solver.lambda)?;
            mean = update_mean(&mean, &weighted.weights, &noise, solver.step_size(k))?;
            self.sampler.observe(&weighted.weights, &noise);
        }
        Ok(mean)
    }

    /// Moves the sampler state forward one control step.
    pub fn shift(&mut self) {
        self.sampler.shift(self.config.solver.warm_start);
    }

    pub fn reset(&mut self) {
        self.sampler.reset();
    }
}

/// One stateless MPPI solve (fresh sampler state).
pub fn mppi_step<S: System + ?Sized>(
    config: &MppiConfig,
    system: &S,
    x0: &[f64],
    nominal: &ControlSequence,
    seed: u64,
) -> Result<ControlSequence> {
    Mppi::new(config.clone())?.optimize(system, x0, nominal, seed)
}

/// States, applied controls and costs of a closed-loop run. Row `k` holds the
/// control applied over `[k·dt, (k+1)·dt)` and the state reached at its end.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub dt: f64,
    pub state_dim: usize,
    pub control_dim: usize,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub step_costs: Vec<f64>,
    /// Wall-clock seconds per solve. Not reproducible.
    pub solve_seconds: Vec<f64>,
}

impl RunLog {
    pub fn new(dt: f64, state_dim: usize, control_dim: usize) -> Self {
        Self {
            dt,
            state_dim,
            control_dim,
            states: Vec::new(),
            controls: Vec::new(),
            step_costs: Vec::new(),
            solve_seconds: Vec::new(),
        }
    }

    pub fn push(&mut self, state: Vec<f64>, control: Vec<f64>, step_cost: f64) {
        self.states.push(state);
        self.controls.push(control);
        self.step_costs.push(step_cost);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.dt
    }

    /// Control dimension `dim` over the whole run.
    pub fn control_series(&self, dim: usize) -> Vec<f64> {
        self.controls.iter().map(|c| c[dim]).collect()
    }

    pub fn accumulated_cost(&self) -> f64 {
        self.step_costs.iter().sum()
    }
}

/// Additive plant disturbance applied after each plant step.
pub type Disturbance<'a> = dyn Fn(usize, &mut [f64]) + Sync + 'a;

/// Receding-horizon loop: solve, apply the first control, log, shift.
pub struct RecedingHorizon<'a> {
    config: MppiConfig,
    disturbance: Option<&'a Disturbance<'a>>,
}

impl<'a> RecedingHorizon<'a> {
    pub fn new(config: MppiConfig) -> Self {
        Self {
            config,
            disturbance: None,
        }
    }

    pub fn with_disturbance(mut self, disturbance: &'a Disturbance<'a>) -> Self {
        self.disturbance = Some(disturbance);
        self
    }

    /// Runs for `duration` seconds (a positive multiple of `dt`). Plant
    /// step `k` solves with seed `derive(seed, k)`.
    pub fn run<S: System + ?Sized>(&self, system: &S, x0: &[f64], duration: f64, seed: u64) -> Result<RunLog> {
        let dt = self.config.solver.dt;
        let steps = num_steps(duration, dt)?;
        let mut mppi = Mppi::new(self.config.clone())?;
        let mut nominal = ControlSequence::zeros(self.config.solver.horizon, system.control_dim())
            .with_bounds(system.control_bounds())?;
        let mut x = x0.to_vec();
        let mut log = RunLog::new(dt, system.state_dim(), system.control_dim());
        for k in 0..steps {
            let started = Instant::now();
            nominal = mppi.optimize(system, &x, &nominal, seed::derive(seed, k as u64))?;
            log.solve_seconds.push(started.elapsed().as_secs_f64());
            let mut u = nominal.at(0).to_vec();
            clamp_into(&mut u, nominal.bounds());
            system.step(&mut x, &u, dt);
            if let Some(disturb) = self.disturbance {
                disturb(k, &mut x);
            }
            log.push(x.clone(), u, system.running_cost(&x));
            nominal.shift(self.config.solver.warm_start);
            mppi.shift();
        }
        Ok(log)
    }
}

/// Number of plant steps in `duration` seconds.
pub fn num_steps(duration: f64, dt: f64) -> Result<usize> {
    let ratio = duration / dt;
    let steps = ratio.round();
    if !(steps >= 1.0) || (ratio - steps).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!(
            "duration {duration} s is not a positive multiple of dt = {dt} s"
        )));
    }
    Ok(steps as usize)
}

/// See [`RecedingHorizon::run`].
pub fn receding_horizon_run<S: System + ?Sized>(
    config: &MppiConfig,
    system: &S,
    x0: &[f64],
    duration: f64,
    seed: u64,
) -> Result<RunLog> {
    RecedingHorizon::new(config.clone()).run(system, x0, duration, seed)
}
