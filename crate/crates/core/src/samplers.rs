//! Sampling distributions for MPPI control perturbations.
//!
//! Every sampler returns a [`NoiseBatch`] already scaled to control units, so
//! the controller forms `v_t = u_t + z(t)` for all of them.
//!
//! * `gaussian`: i.i.d. `N(0, σ²)` per sample, step and dimension.
//! * `colored`: power-law noise from [`crate::noise`].
//! * `nln`: product of a normal and a log-normal variate (heavy tailed),
//!   scaled to variance `σ²`. Baseline approximation of log-MPPI sampling.
//! * `smooth`: derivative-space Gaussian noise `ε ~ N(0, σ²)` emitted as
//!   increments `ε·dt` on top of a carry trajectory that integrates the
//!   weighted increments across solver iterations.
//! * `smooth_star`: `smooth` with `σ` replaced by `σ/dt`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{shift_rows, WarmStart};
use crate::error::{Error, Result};
use crate::noise::{ColoredNoise, ColoredSpec, NoiseBatch};
use crate::seed;

/// Log-normal factor parameters for the NLN sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlnParams {
    /// Standard deviation `s` of the Gaussian exponent of the log-normal
    /// factor, per control dimension.
    pub log_std: Vec<f64>,
}

/// Sampler selection and parameters. Per-dimension vectors must all have
/// one entry per control dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Gaussian {
        sigma: Vec<f64>,
    },
    Colored {
        sigma: Vec<f64>,
        gamma: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f_min: Option<f64>,
    },
    Nln {
        sigma: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nln: Option<NlnParams>,
    },
    Smooth {
        sigma: Vec<f64>,
        dt: f64,
    },
    SmoothStar {
        sigma: Vec<f64>,
        dt: f64,
    },
}

/// Default log-normal exponent deviation for [`SamplerConfig::Nln`].
pub const DEFAULT_NLN_LOG_STD: f64 = 1.0;

impl SamplerConfig {
    /// Colored sampler with the default cutoff `f_min = 1/N`.
    pub fn colored(sigma: Vec<f64>, gamma: Vec<f64>) -> Self {
        SamplerConfig::Colored {
            sigma,
            gamma,
            f_min: None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SamplerConfig::Gaussian { .. } => "gaussian",
            SamplerConfig::Colored { .. } => "colored",
            SamplerConfig::Nln { .. } => "nln",
            SamplerConfig::Smooth { .. } => "smooth",
            SamplerConfig::SmoothStar { .. } => "smooth_star",
        }
    }

    pub fn sigma(&self) -> &[f64] {
        match self {
            SamplerConfig::Gaussian { sigma }
            | SamplerConfig::Colored { sigma, .. }
            | SamplerConfig::Nln { sigma, .. }
            | SamplerConfig::Smooth { sigma, .. }
            | SamplerConfig::SmoothStar { sigma, .. } => sigma,
        }
    }

    pub fn sigma_mut(&mut self) -> &mut Vec<f64> {
        match self {
            SamplerConfig::Gaussian { sigma }
            | SamplerConfig::Colored { sigma, .. }
            | SamplerConfig::Nln { sigma, .. }
            | SamplerConfig::Smooth { sigma, .. }
            | SamplerConfig::SmoothStar { sigma, .. } => sigma,
        }
    }

    pub fn control_dim(&self) -> usize {
        self.sigma().len()
    }

    /// Standard deviation actually used for the Gaussian draws of each
    /// dimension (`σ/dt` for `smooth_star`, `σ` otherwise).
    pub fn effective_sigma(&self) -> Vec<f64> {
        match self {
            SamplerConfig::SmoothStar { sigma, dt } => sigma.iter().map(|s| s / dt).collect(),
            other => other.sigma().to_vec(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(
            self,
            SamplerConfig::Smooth { .. } | SamplerConfig::SmoothStar { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n_u = self.control_dim();
        if n_u == 0 {
            return Err(Error::InvalidConfig("sigma must have at least one entry".into()));
        }
        check_nonnegative("sigma", self.sigma())?;
        let check_len = |what: &'static str, v: &[f64]| {
            if v.len() == n_u {
                Ok(())
            } else {
                Err(Error::ShapeMismatch {
                    what,
                    expected: n_u,
                    actual: v.len(),
                })
            }
        };
        match self {
            SamplerConfig::Gaussian { .. } => {}
            SamplerConfig::Colored { gamma, f_min, .. } => {
                check_len("gamma", gamma)?;
                check_nonnegative("gamma", gamma)?;
                if let Some(f) = f_min {
                    if !(*f > 0.0 && f.is_finite()) {
                        return Err(Error::InvalidConfig(format!("f_min must be positive, got {f}")));
                    }
                }
            }
            SamplerConfig::Nln { nln, .. } => {
                if let Some(p) = nln {
                    check_len("nln.log_std", &p.log_std)?;
                    check_nonnegative("nln.log_std", &p.log_std)?;
                }
            }
            SamplerConfig::Smooth { dt, .. } | SamplerConfig::SmoothStar { dt, .. } => {
                if !(*dt > 0.0 && dt.is_finite()) {
                    return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
                }
            }
        }
        Ok(())
    }
}

fn check_nonnegative(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        Some(v) => Err(Error::InvalidConfig(format!(
            "{what} entries must be finite and nonnegative, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Solver-persistent sampler state. Only the smooth variants carry one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplerState {
    /// `T × n_u` accumulated increments (smooth variants).
    pub carry: Option<Vec<f64>>,
}

impl SamplerState {
    pub fn for_config(config: &SamplerConfig, horizon: usize) -> Self {
        Self {
            carry: config
                .is_smooth()
                .then(|| vec![0.0; horizon * config.control_dim()]),
        }
    }
}

/// A configured sampler together with its state and any precomputed tables.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    horizon: usize,
    colored: Option<ColoredNoise>,
    state: SamplerState,
}

impl Sampler {
    pub fn new(config: SamplerConfig, horizon: usize) -> Result<Self> {
        config.validate()?;
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        let colored = match &config {
            SamplerConfig::Colored { sigma, gamma, f_min } => {
                let specs = sigma
                    .iter()
                    .zip(gamma)
                    .map(|(&s, &g)| match f_min {
                        Some(f) => ColoredSpec::with_f_min(horizon, g, s, *f),
                        None => ColoredSpec::new(horizon, g, s),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(ColoredNoise::new(specs)?)
            }
            _ => None,
        };
        let state = SamplerState::for_config(&config, horizon);
        Ok(Self {
            config,
            horizon,
            colored,
            state,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn control_dim(&self) -> usize {
        self.config.control_dim()
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    /// `samples` noise trajectories; pure given the current state and `seed`.
    pub fn draw(&self, samples: usize, seed: u64) -> Result<NoiseBatch> {
        if samples == 0 {
            return Err(Error::InvalidConfig("number of samples must be positive".into()));
        }
        match &self.config {
            SamplerConfig::Colored { .. } => self
                .colored
                .as_ref()
                .expect("colored tables built in new")
                .sample_batch(samples, seed),
            _ => draw_time_domain(&self.config, &self.state, samples, self.horizon, seed),
        }
    }

    /// Feeds back the weights of the last batch. Smooth variants fold the
    /// weighted increments into their carry; the others ignore it.
    pub fn observe(&mut self, weights: &[f64], batch: &NoiseBatch) {
        if let Some(carry) = self.state.carry.as_mut() {
            debug_assert_eq!(carry.len(), batch.horizon() * batch.control_dim());
            carry.iter_mut().for_each(|c| *c = 0.0);
            for (m, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (c, z) in carry.iter_mut().zip(batch.sample(m)) {
                    *c += w * z;
                }
            }
        }
    }

    /// Advances the state one control step (receding-horizon warm start).
    pub fn shift(&mut self, fill: WarmStart) {
        if let Some(carry) = self.state.carry.as_mut() {
            shift_rows(carry, self.config.control_dim(), fill);
        }
    }

    /// Clears the state at the start of an episode.
    pub fn reset(&mut self) {
        self.state = SamplerState::for_config(&self.config, self.horizon);
    }
}

/// Draws a batch for `config` given `state`, without precomputed tables.
pub fn draw(
    config: &SamplerConfig,
    state: &SamplerState,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<NoiseBatch> {
    let mut sampler = Sampler::new(config.clone(), horizon)?;
    if config.is_smooth() {
        match &state.carry {
            Some(carry) if carry.len() == horizon * config.control_dim() => {
                sampler.state = state.clone();
            }
            Some(carry) => {
                return Err(Error::ShapeMismatch {
                    what: "smooth sampler carry",
                    expected: horizon * config.control_dim(),
                    actual: carry.len(),
                })
            }
            None => {
                return Err(Error::InvalidConfig(
                    "smooth samplers need a carry state".into(),
                ))
            }
        }
    } else if state.carry.is_some() {
        return Err(Error::InvalidConfig(format!(
            "{} sampler does not take a carry state",
            config.kind_name()
        )));
    }
    sampler.draw(samples, seed)
}

/// Fills every `(sample, dim)` stream with `element` draws, then adds `carry`.
fn fill_streams<F>(batch: &mut NoiseBatch, carry: Option<&[f64]>, element: F)
where
    F: Fn(&mut seed::StreamRng, usize) -> f64 + Sync,
{
    let (horizon, n_u, seed) = (batch.horizon(), batch.control_dim(), batch.seed());
    batch
        .values_mut()
        .par_chunks_mut(horizon * n_u)
        .with_min_len(64)
        .enumerate()
        .for_each(|(m, chunk)| {
            for d in 0..n_u {
                let mut rng = seed::stream_rng(seed, (m * n_u + d) as u64);
                for t in 0..horizon {
                    chunk[t * n_u + d] = element(&mut rng, d);
                }
            }
            if let Some(carry) = carry {
                for (v, c) in chunk.iter_mut().zip(carry) {
                    *v += c;
                }
            }
        });
}

fn draw_time_domain(
    config: &SamplerConfig,
    state: &SamplerState,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<NoiseBatch> {
    let n_u = config.control_dim();
    let sigma = config.effective_sigma();
    let mut batch = NoiseBatch::zeros(samples, horizon, n_u, seed);
    let carry = state.carry.as_deref();
    match config {
        SamplerConfig::Gaussian { .. } => fill_streams(&mut batch, carry, |rng, d| {
            let n: f64 = rng.sample(StandardNormal);
            sigma[d] * n
        }),
        SamplerConfig::Nln { nln, .. } => {
            let log_std: Vec<f64> = match nln {
                Some(p) => p.log_std.clone(),
                None => vec![DEFAULT_NLN_LOG_STD; n_u],
            };
            // Var(n·e^ℓ) = ν²·e^{2s²}, so ν = σ·e^{−s²} gives variance σ².
            let normal_std: Vec<f64> = sigma
                .iter()
                .zip(&log_std)
                .map(|(s, ls)| s * (-ls * ls).exp())
                .collect();
            fill_streams(&mut batch, carry, |rng, d| {
                let n: f64 = rng.sample(StandardNormal);
                let l: f64 = rng.sample(StandardNormal);
                normal_std[d] * n * (log_std[d] * l).exp()
            })
        }
        SamplerConfig::Smooth { dt, .. } | SamplerConfig::SmoothStar { dt, .. } => {
            let dt = *dt;
            fill_streams(&mut batch, carry, |rng, d| {
                let n: f64 = rng.sample(StandardNormal);
                sigma[d] * n * dt
            })
        }
        SamplerConfig::Colored { .. } => unreachable!("colored noise is drawn in the frequency domain"),
    }
    Ok(batch)
}
