//! Colored (power-law) noise drawn in the frequency domain.
//!
//! A trajectory of `T` steps is represented by `N = ⌊T/2⌋ + 1` complex
//! coefficients of a Hermitian-symmetric spectrum. Real and imaginary parts
//! are independent Gaussians whose variance falls off as `f^-γ`; the inverse
//! DFT then yields a real, time-correlated Gaussian trajectory whose marginal
//! variance is normalized to `σ²` by the constant [`zeta`].
//!
//! `γ = 0` gives (nearly) white noise, `γ = 1` pink, `γ = 2` brown.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::seed;

/// Number of independent frequency coefficients for a horizon of `horizon` steps.
pub fn num_frequencies(horizon: usize) -> usize {
    horizon / 2 + 1
}

/// Variance normalization constant
/// `ζ = T⁻² · N^γ · (1 + 4·Σ_{n=1}^{N−1} n^{−γ})`.
///
/// Dividing the coefficient variances by `ζ` makes the time-domain marginal
/// variance equal `σ²` (exactly for odd `T`; even `T` carries a Nyquist
/// term that is counted four-fold here but contributes once).
pub fn zeta(horizon: usize, gamma: f64) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::InvalidConfig(format!(
            "horizon must be at least 2, got {horizon}"
        )));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "colored exponent must be a finite nonnegative number, got {gamma}"
        )));
    }
    let t = horizon as f64;
    let n_freq = num_frequencies(horizon);
    let tail: f64 = (1..n_freq).map(|n| (n as f64).powf(-gamma)).sum();
    Ok((n_freq as f64).powf(gamma) * (1.0 + 4.0 * tail) / (t * t))
}

/// Parameters of one control dimension's colored-noise distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoredSpec {
    horizon: usize,
    gamma: f64,
    sigma: f64,
    f_min: f64,
}

impl ColoredSpec {
    /// Spec with the default cutoff `f_min = 1/N`.
    pub fn new(horizon: usize, gamma: f64, sigma: f64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        let f_min = 1.0 / num_frequencies(horizon) as f64;
        Self::with_f_min(horizon, gamma, sigma, f_min)
    }

    pub fn with_f_min(horizon: usize, gamma: f64, sigma: f64, f_min: f64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "colored exponent must be finite and nonnegative, got {gamma}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "standard deviation must be finite and nonnegative, got {sigma}"
            )));
        }
        if !(f_min > 0.0 && f_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cutoff frequency must be positive, got {f_min}"
            )));
        }
        Ok(Self {
            horizon,
            gamma,
            sigma,
            f_min,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn num_frequencies(&self) -> usize {
        num_frequencies(self.horizon)
    }

    pub fn zeta(&self) -> f64 {
        zeta(self.horizon, self.gamma).expect("validated at construction")
    }

    /// Variance of the real (and imaginary) part of coefficient `n`:
    /// `max{n/N, f_min}^{−γ} · σ² / ζ`.
    pub fn coefficient_variance(&self, n: usize) -> f64 {
        let freq = (n as f64 / self.num_frequencies() as f64).max(self.f_min);
        freq.powf(-self.gamma) * self.sigma * self.sigma / self.zeta()
    }

    fn coefficient_std_devs(&self) -> Vec<f64> {
        (0..self.num_frequencies())
            .map(|n| self.coefficient_variance(n).sqrt())
            .collect()
    }
}

/// The `N` independent coefficients of one Hermitian-symmetric spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    horizon: usize,
    coefficients: Vec<Complex64>,
}

impl FrequencySample {
    /// Wraps coefficients for a horizon of `horizon` steps. The DC imaginary
    /// part and, for even horizons, the Nyquist imaginary part must be zero.
    pub fn new(horizon: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidConfig(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        let n_freq = num_frequencies(horizon);
        if coefficients.len() != n_freq {
            return Err(Error::ShapeMismatch {
                what: "frequency coefficients",
                expected: n_freq,
                actual: coefficients.len(),
            });
        }
        if coefficients[0].im != 0.0 {
            return Err(Error::InvalidConfig(
                "DC coefficient must be purely real".into(),
            ));
        }
        if horizon % 2 == 0 && coefficients[n_freq - 1].im != 0.0 {
            return Err(Error::InvalidConfig(
                "Nyquist coefficient must be purely real for even horizons".into(),
            ));
        }
        Ok(Self {
            horizon,
            coefficients,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficients stacked in the column order of [`build_ifft_matrix`]:
    /// `Re Z[0]`, then `Re Z[n], Im Z[n]` for each `n ≥ 1`, omitting the
    /// Nyquist imaginary part when the horizon is even.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon);
        out.push(self.coefficients[0].re);
        for (n, c) in self.coefficients.iter().enumerate().skip(1) {
            out.push(c.re);
            if !is_nyquist(self.horizon, n) {
                out.push(c.im);
            }
        }
        out
    }
}

fn is_nyquist(horizon: usize, n: usize) -> bool {
    horizon % 2 == 0 && n == horizon / 2
}

/// Draws one spectrum: `Re Z[n], Im Z[n] ~ N(μ_n, var_n)` independently,
/// then zeroes the DC imaginary part and (even `T`) the Nyquist one.
pub fn sample_frequency<R: Rng + ?Sized>(
    spec: &ColoredSpec,
    mean_freq: &[Complex64],
    rng: &mut R,
) -> Result<FrequencySample> {
    let n_freq = spec.num_frequencies();
    if mean_freq.len() != n_freq {
        return Err(Error::ShapeMismatch {
            what: "frequency-domain mean",
            expected: n_freq,
            actual: mean_freq.len(),
        });
    }
    let mut coefficients = Vec::with_capacity(n_freq);
    draw_coefficients(&spec.coefficient_std_devs(), mean_freq, rng, &mut coefficients);
    enforce_hermitian(spec.horizon, &mut coefficients);
    FrequencySample::new(spec.horizon, coefficients)
}

fn draw_coefficients<R: Rng + ?Sized>(
    std_devs: &[f64],
    mean_freq: &[Complex64],
    rng: &mut R,
    out: &mut Vec<Complex64>,
) {
    out.clear();
    for (sd, mu) in std_devs.iter().zip(mean_freq) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.push(Complex64::new(mu.re + sd * re, mu.im + sd * im));
    }
}

fn enforce_hermitian(horizon: usize, coefficients: &mut [Complex64]) {
    coefficients[0].im = 0.0;
    if horizon % 2 == 0 {
        coefficients[horizon / 2].im = 0.0;
    }
}

/// Inverse DFT over a Hermitian-symmetric spectrum given by its first `N`
/// coefficients. Reuses a planned FFT of length `T`.
#[derive(Clone)]
pub struct HermitianIfft {
    horizon: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for HermitianIfft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianIfft")
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl HermitianIfft {
    pub fn new(horizon: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(horizon);
        Self { horizon, fft }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scratch_len(&self) -> usize {
        self.fft.get_inplace_scratch_len()
    }

    /// Writes the real time-domain signal into `out` and returns the largest
    /// discarded imaginary magnitude.
    pub fn apply(
        &self,
        coefficients: &[Complex64],
        buffer: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
        out: &mut [f64],
    ) -> f64 {
        let t_len = self.horizon;
        let n_freq = coefficients.len();
        debug_assert_eq!(n_freq, num_frequencies(t_len));
        debug_assert_eq!(out.len(), t_len);
        buffer.clear();
        buffer.extend_from_slice(coefficients);
        for t in n_freq..t_len {
            buffer.push(coefficients[t_len - t].conj());
        }
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex64::default());
        self.fft.process_with_scratch(buffer, scratch);
        let scale = 1.0 / t_len as f64;
        let mut residual = 0.0f64;
        for (o, c) in out.iter_mut().zip(buffer.iter()) {
            *o = c.re * scale;
            residual = residual.max((c.im * scale).abs());
        }
        residual
    }
}

/// `z(t) = (1/T)·Σ_{n=0}^{T−1} Z′[n]·e^{i2πnt/T}` with `Z′` the conjugate
/// mirror of the sample.
pub fn inverse_transform(sample: &FrequencySample, horizon: usize) -> Result<Vec<f64>> {
    Ok(inverse_transform_with_residual(sample, horizon)?.0)
}

/// Like [`inverse_transform`], also returning the largest imaginary
/// magnitude the complex transform left behind.
pub fn inverse_transform_with_residual(
    sample: &FrequencySample,
    horizon: usize,
) -> Result<(Vec<f64>, f64)> {
    if sample.horizon != horizon {
        return Err(Error::ShapeMismatch {
            what: "frequency sample horizon",
            expected: horizon,
            actual: sample.horizon,
        });
    }
    let ifft = HermitianIfft::new(horizon);
    let mut out = vec![0.0; horizon];
    let residual = ifft.apply(&sample.coefficients, &mut Vec::new(), &mut Vec::new(), &mut out);
    Ok((out, residual))
}

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix/vector dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Real matrix mapping [`FrequencySample::stacked`] to the time-domain
/// trajectory. Entries are `(1/T)·2cos(2πnt/T)` for real parts and
/// `−(1/T)·2sin(2πnt/T)` for imaginary parts, with the DC column (and the
/// even-`T` Nyquist column) weighted 1 instead of 2. Square, `T × T`.
///
/// Dense `O(T²)`; kept as an independent check on the FFT path.
pub fn build_ifft_matrix(horizon: usize) -> Result<Matrix> {
    if horizon < 2 {
        return Err(Error::InvalidConfig(format!(
            "horizon must be at least 2, got {horizon}"
        )));
    }
    let t_len = horizon as f64;
    let n_freq = num_frequencies(horizon);
    let mut columns: Vec<Box<dyn Fn(usize) -> f64>> = Vec::with_capacity(horizon);
    columns.push(Box::new(|_| 1.0 / t_len));
    for n in 1..n_freq {
        let weight = if is_nyquist(horizon, n) { 1.0 } else { 2.0 };
        let omega = 2.0 * std::f64::consts::PI * n as f64 / t_len;
        columns.push(Box::new(move |t| weight * (omega * t as f64).cos() / t_len));
        if !is_nyquist(horizon, n) {
            columns.push(Box::new(move |t| -2.0 * (omega * t as f64).sin() / t_len));
        }
    }
    debug_assert_eq!(columns.len(), horizon);
    let mut data = Vec::with_capacity(horizon * horizon);
    for t in 0..horizon {
        data.extend(columns.iter().map(|col| col(t)));
    }
    Ok(Matrix {
        rows: horizon,
        cols: horizon,
        data,
    })
}

/// `M × T × n_u` tensor of noise trajectories, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    samples: usize,
    horizon: usize,
    control_dim: usize,
    values: Vec<f64>,
    seed: u64,
}

impl NoiseBatch {
    pub fn zeros(samples: usize, horizon: usize, control_dim: usize, seed: u64) -> Self {
        Self {
            samples,
            horizon,
            control_dim,
            values: vec![0.0; samples * horizon * control_dim],
            seed,
        }
    }

    pub fn from_values(
        samples: usize,
        horizon: usize,
        control_dim: usize,
        values: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let expected = samples * horizon * control_dim;
        if values.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "noise batch values",
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            samples,
            horizon,
            control_dim,
            values,
            seed,
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, sample: usize, t: usize, dim: usize) -> f64 {
        self.values[(sample * self.horizon + t) * self.control_dim + dim]
    }

    /// Trajectory `m` as a `T × n_u` row-major slice.
    pub fn sample(&self, m: usize) -> &[f64] {
        let len = self.horizon * self.control_dim;
        &self.values[m * len..(m + 1) * len]
    }

    pub fn sample_chunks_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        let len = self.horizon * self.control_dim;
        self.values.chunks_exact_mut(len)
    }

    /// Values of one control dimension of one sample, in time order.
    pub fn trajectory(&self, m: usize, dim: usize) -> impl Iterator<Item = f64> + '_ {
        self.sample(m)
            .iter()
            .skip(dim)
            .step_by(self.control_dim)
            .copied()
    }
}

/// Batch generator for one [`ColoredSpec`] per control dimension.
#[derive(Debug, Clone)]
pub struct ColoredNoise {
    specs: Vec<ColoredSpec>,
    std_devs: Vec<Vec<f64>>,
    ifft: HermitianIfft,
}

impl ColoredNoise {
    pub fn new(specs: Vec<ColoredSpec>) -> Result<Self> {
        let first = specs
            .first()
            .ok_or_else(|| Error::InvalidConfig("need at least one control dimension".into()))?;
        let horizon = first.horizon;
        if let Some(bad) = specs.iter().find(|s| s.horizon != horizon) {
            return Err(Error::ShapeMismatch {
                what: "per-dimension horizon",
                expected: horizon,
                actual: bad.horizon,
            });
        }
        let std_devs = specs.iter().map(ColoredSpec::coefficient_std_devs).collect();
        Ok(Self {
            specs,
            std_devs,
            ifft: HermitianIfft::new(horizon),
        })
    }

    pub fn specs(&self) -> &[ColoredSpec] {
        &self.specs
    }

    pub fn horizon(&self) -> usize {
        self.ifft.horizon
    }

    /// `samples` zero-mean trajectories. Sample `m`, dimension `d` reads
    /// from stream `m·n_u + d` of `seed`, so the output does not depend on
    /// how samples are spread over threads.
    pub fn sample_batch(&self, samples: usize, seed: u64) -> Result<NoiseBatch> {
        if samples == 0 {
            return Err(Error::InvalidConfig("number of samples must be positive".into()));
        }
        let horizon = self.horizon();
        let n_u = self.specs.len();
        let n_freq = num_frequencies(horizon);
        let zero_mean = vec![Complex64::default(); n_freq];
        let mut batch = NoiseBatch::zeros(samples, horizon, n_u, seed);
        batch
            .values
            .par_chunks_mut(horizon * n_u)
            .enumerate()
            .for_each_init(
                || {
                    (
                        Vec::with_capacity(n_freq),
                        Vec::with_capacity(horizon),
                        Vec::with_capacity(self.ifft.scratch_len()),
                        vec![0.0; horizon],
                    )
                },
                |(coeffs, buffer, scratch, signal), (m, chunk)| {
                    for (d, std_devs) in self.std_devs.iter().enumerate() {
                        let mut rng = seed::stream_rng(seed, (m * n_u + d) as u64);
                        draw_coefficients(std_devs, &zero_mean, &mut rng, coeffs);
                        enforce_hermitian(horizon, coeffs);
                        self.ifft.apply(coeffs, buffer, scratch, signal);
                        for (t, v) in signal.iter().enumerate() {
                            chunk[t * n_u + d] = *v;
                        }
                    }
                },
            );
        Ok(batch)
    }
}

/// `samples` independent zero-mean colored trajectories, one spec per
/// control dimension. Deterministic in `(specs, samples, seed)`.
pub fn sample_noise_batch(specs: &[ColoredSpec], samples: usize, seed: u64) -> Result<NoiseBatch> {
    ColoredNoise::new(specs.to_vec())?.sample_batch(samples, seed)
}
