use colored_mppi::analysis::{fit_psd_exponent, periodogram};
use colored_mppi::noise::{
    build_ifft_matrix, inverse_transform, inverse_transform_with_residual, num_frequencies, sample_noise_batch,
    ColoredSpec, FrequencySample, NoiseBatch,
};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn pooled_variance(batch: &NoiseBatch) -> f64 {
    let v = batch.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Exact time-domain variance implied by the coefficient variances: DC and
/// (even T) Nyquist contribute once, every other bin four times.
fn predicted_variance(spec: &ColoredSpec) -> f64 {
    let t = spec.horizon();
    let total: f64 = (0..spec.num_frequencies())
        .map(|n| {
            let single = n == 0 || (t % 2 == 0 && n == t / 2);
            spec.coefficient_variance(n) * if single { 1.0 } else { 4.0 }
        })
        .sum();
    total / (t * t) as f64
}

fn hermitian_sample(horizon: usize) -> impl Strategy<Value = FrequencySample> {
    let n = num_frequencies(horizon);
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n).prop_map(move |pairs| {
        let mut coeffs: Vec<Complex64> = pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        coeffs[0].im = 0.0;
        if horizon % 2 == 0 {
            coeffs[n - 1].im = 0.0;
        }
        FrequencySample::new(horizon, coeffs).unwrap()
    })
}

fn any_horizon_sample() -> impl Strategy<Value = FrequencySample> {
    prop::sample::select(vec![2usize, 3, 4, 5, 8, 65]).prop_flat_map(hermitian_sample)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn fft_path_matches_dense_matrix(sample in any_horizon_sample()) {
        let t = sample.horizon();
        let fast = inverse_transform(&sample, t).unwrap();
        let dense = build_ifft_matrix(t).unwrap().mul_vec(&sample.stacked());
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-12, "T={t}: {a} vs {b}");
        }
    }

    #[test]
    fn inverse_transform_is_real(sample in prop::sample::select(vec![7usize, 16, 64, 65, 250]).prop_flat_map(hermitian_sample)) {
        let (_, residual) = inverse_transform_with_residual(&sample, sample.horizon()).unwrap();
        prop_assert!(residual < 1e-9);
    }

    #[test]
    fn zeta_is_positive(t in 2usize..400, gamma in 0.0f64..6.0) {
        let z = colored_mppi::noise::zeta(t, gamma).unwrap();
        prop_assert!(z > 0.0 && z.is_finite());
    }
}

#[test]
fn dc_only_sample_is_constant() {
    for t in [2usize, 5, 8, 65] {
        let mut coeffs = vec![Complex64::default(); num_frequencies(t)];
        coeffs[0] = Complex64::new(3.0, 0.0);
        let z = inverse_transform(&FrequencySample::new(t, coeffs).unwrap(), t).unwrap();
        assert!(z.iter().all(|v| (v - 3.0 / t as f64).abs() < 1e-15));
    }
}

#[test]
fn matrix_oracle_on_random_draws() {
    use rand::SeedableRng;
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(5);
    for t in [2usize, 3, 4, 5, 8, 65] {
        let m = build_ifft_matrix(t).unwrap();
        assert_eq!((m.rows, m.cols), (t, t));
        let spec = ColoredSpec::new(t, 1.5, 2.0).unwrap();
        let mean = vec![Complex64::default(); num_frequencies(t)];
        for _ in 0..100 {
            let s = colored_mppi::noise::sample_frequency(&spec, &mean, &mut rng).unwrap();
            let fast = inverse_transform(&s, t).unwrap();
            for (a, b) in fast.iter().zip(m.mul_vec(&s.stacked())) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn variance_is_normalized_for_odd_and_long_horizons() {
    for t in [65usize, 250] {
        for gamma in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0] {
            let spec = ColoredSpec::new(t, gamma, 1.0).unwrap();
            let var = pooled_variance(&sample_noise_batch(&[spec], 100_000, 17).unwrap());
            assert!((var - 1.0).abs() < 0.05, "T={t} γ={gamma}: {var}");
        }
    }
}

#[test]
fn short_even_horizon_follows_predicted_variance() {
    // With the normalization as defined, an even horizon under-counts
    // nothing and over-counts the Nyquist bin: at T = 16 the realized
    // variance sits below σ² by up to ~9 % for γ near 0.
    for gamma in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let spec = ColoredSpec::new(16, gamma, 1.0).unwrap();
        let predicted = predicted_variance(&spec);
        let var = pooled_variance(&sample_noise_batch(&[spec], 100_000, 29).unwrap());
        assert!((var / predicted - 1.0).abs() < 0.02, "γ={gamma}: {var} vs {predicted}");
        assert!(predicted <= 1.0 + 1e-12 && predicted > 0.9, "γ={gamma}: {predicted}");
    }
    let exact = predicted_variance(&ColoredSpec::new(65, 2.0, 1.0).unwrap());
    assert!((exact - 1.0).abs() < 1e-12);
}

#[test]
fn batch_variance_examples() {
    let var0 = pooled_variance(&sample_noise_batch(&[ColoredSpec::new(65, 0.0, 1.0).unwrap()], 100_000, 1).unwrap());
    assert!((0.98..=1.02).contains(&var0), "{var0}");
    let var2 = pooled_variance(&sample_noise_batch(&[ColoredSpec::new(65, 2.0, 1.0).unwrap()], 100_000, 1).unwrap());
    assert!((0.95..=1.05).contains(&var2), "{var2}");
}

#[test]
fn white_noise_degeneracy() {
    let batch = sample_noise_batch(&[ColoredSpec::new(65, 0.0, 1.0).unwrap()], 100_000, 3).unwrap();
    let values = batch.values();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    assert!((m3 / m2.powf(1.5)).abs() < 0.05);
    assert!((m4 / (m2 * m2) - 3.0).abs() < 0.05);
    let mut lag = 0.0;
    let mut pairs = 0.0;
    for m in 0..batch.samples() {
        let tr: Vec<f64> = batch.trajectory(m, 0).collect();
        for w in tr.windows(2) {
            lag += (w[0] - mean) * (w[1] - mean);
            pairs += 1.0;
        }
    }
    assert!((lag / pairs / m2).abs() < 0.01);
}

fn fitted_gamma(gamma: f64, seed: u64) -> f64 {
    let spec = ColoredSpec::new(256, gamma, 1.0).unwrap();
    let batch = sample_noise_batch(&[spec], 10_000, seed).unwrap();
    let psds: Vec<_> = (0..batch.samples())
        .map(|m| periodogram(&batch.trajectory(m, 0).collect::<Vec<_>>(), 1.0).unwrap())
        .collect();
    let n = spec.num_frequencies() as f64;
    fit_psd_exponent(&psds, (2.0 / n, 0.5)).unwrap()
}

#[test]
fn spectral_exponent_round_trip() {
    for gamma in [0.5, 1.0, 2.0, 4.0] {
        let est = fitted_gamma(gamma, 8);
        assert!((est - gamma).abs() < 0.15, "γ={gamma}: fitted {est}");
    }
    assert!(fitted_gamma(0.0, 9).abs() < 0.1);
}

#[test]
fn sampled_power_ratio_example() {
    use rand::SeedableRng;
    let spec = ColoredSpec::new(64, 2.0, 1.0).unwrap();
    let mean = vec![Complex64::default(); spec.num_frequencies()];
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(77);
    let (mut p1, mut p16) = (0.0, 0.0);
    for _ in 0..100_000 {
        let s = colored_mppi::noise::sample_frequency(&spec, &mean, &mut rng).unwrap();
        p1 += s.coefficients()[1].re.powi(2);
        p16 += s.coefficients()[16].re.powi(2);
    }
    let ratio = p1 / p16;
    assert!((ratio / 256.0 - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn deterministic_across_thread_counts() {
    let specs = [ColoredSpec::new(65, 1.0, 0.7).unwrap(), ColoredSpec::new(65, 4.0, 2.0).unwrap()];
    let batches: Vec<NoiseBatch> = [1usize, 4, 16]
        .iter()
        .map(|&n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| sample_noise_batch(&specs, 3000, 99).unwrap())
        })
        .collect();
    assert!(batches.windows(2).all(|w| w[0].values() == w[1].values()));
}
