//! Colored noise at increasing exponents: same marginal variance, smoother
//! trajectories, steeper spectra.
//!
//! cargo run --release --example sample_noise

use colored_mppi::analysis::{fit_psd_exponent, periodogram};
use colored_mppi::experiment::noise_stats;
use colored_mppi::noise::{sample_noise_batch, ColoredSpec};

fn main() -> colored_mppi::Result<()> {
    let horizon = 256;
    let samples = 4_000;
    println!("gamma  variance  lag-1  mean|dz|  fitted gamma");
    for gamma in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let spec = ColoredSpec::new(horizon, gamma, 1.0)?;
        let batch = sample_noise_batch(&[spec], samples, 42)?;
        let (var, lag1, diff) = noise_stats(&batch, 0);
        let psds = (0..samples)
            .map(|m| periodogram(&batch.trajectory(m, 0).collect::<Vec<_>>(), 1.0))
            .collect::<colored_mppi::Result<Vec<_>>>()?;
        let n = spec.num_frequencies() as f64;
        let fitted = fit_psd_exponent(&psds, (2.0 / n, 0.5))?;
        println!("{gamma:5.1}  {var:8.4}  {lag1:5.3}  {diff:8.4}  {fitted:12.3}");
    }
    Ok(())
}
