//! Model predictive path integral (MPPI) control with interchangeable
//! sampling distributions, centred on colored noise drawn in the frequency
//! domain.
//!
//! * [`noise`]: power-law noise via Hermitian-symmetric spectra and an iFFT.
//! * [`samplers`]: gaussian, colored, NLN, smooth and smooth* samplers.
//! * [`controller`]: rollouts, softmax weighting, mean update, receding horizon.
//! * [`systems`]: double integrator and a lagged kinematic vehicle.
//! * [`analysis`]: periodograms, spectral slopes, ensemble statistics.
//! * [`experiment`]: declarative experiment configs and CSV artifacts.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod samplers;
pub mod seed;
pub mod systems;

pub use controller::{ControlSequence, MppiConfig, RunLog, SolverParams};
pub use error::{Error, Result};
pub use noise::{ColoredSpec, NoiseBatch};
pub use samplers::{Sampler, SamplerConfig};
pub use systems::{DoubleIntegrator, LaggedVehicle, System};
