//! Spectra, ensemble statistics and exploration metrics.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::controller::RunLog;
use crate::error::{Error, Result};

/// One-sided periodogram of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    /// Hz, `n/(K·dt)` for `n = 0..=⌊K/2⌋`.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub segment_seconds: f64,
}

impl Periodogram {
    /// Mean power over bins with `lo ≤ f ≤ hi`.
    pub fn mean_power_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let (sum, n) = self
            .frequencies
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Mean power strictly above `cutoff` Hz.
    pub fn mean_power_above(&self, cutoff: f64) -> Option<f64> {
        let (sum, n) = self
            .frequencies
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f > cutoff)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Unwindowed periodogram `|DFT(x)[n]|² / K` at `n/(K·dt)`, `n = 0..=⌊K/2⌋`.
pub fn periodogram(signal: &[f64], dt: f64) -> Result<Periodogram> {
    let k = signal.len();
    if k < 4 {
        return Err(Error::SignalTooShort(k));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let fft = FftPlanner::new().plan_fft_forward(k);
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut buf);
    let bins = k / 2 + 1;
    let seconds = k as f64 * dt;
    Ok(Periodogram {
        frequencies: (0..bins).map(|n| n as f64 / seconds).collect(),
        power: buf[..bins].iter().map(|c| c.norm_sqr() / k as f64).collect(),
        segment_seconds: seconds,
    })
}

/// Bin-wise average of periodograms sharing one frequency grid.
pub fn mean_periodogram(ensemble: &[Periodogram]) -> Result<Periodogram> {
    let first = ensemble.first().ok_or(Error::NotEnoughData {
        what: "periodograms",
        needed: 1,
        got: 0,
    })?;
    let mut power = vec![0.0; first.power.len()];
    for p in ensemble {
        if p.frequencies != first.frequencies {
            return Err(Error::ShapeMismatch {
                what: "periodogram frequency grid",
                expected: first.frequencies.len(),
                actual: p.frequencies.len(),
            });
        }
        for (acc, v) in power.iter_mut().zip(&p.power) {
            *acc += v;
        }
    }
    let n = ensemble.len() as f64;
    power.iter_mut().for_each(|v| *v /= n);
    Ok(Periodogram {
        frequencies: first.frequencies.clone(),
        power,
        segment_seconds: first.segment_seconds,
    })
}

/// Minimum ensemble size for [`fit_psd_exponent`].
pub const MIN_PSD_ENSEMBLE: usize = 100;

/// Power-law exponent of the ensemble-averaged spectrum: minus the
/// least-squares slope of `ln(power)` against `ln(f)` over bins in
/// `[band.0, band.1]`.
pub fn fit_psd_exponent(ensemble: &[Periodogram], band: (f64, f64)) -> Result<f64> {
    if ensemble.len() < MIN_PSD_ENSEMBLE {
        return Err(Error::NotEnoughData {
            what: "periodograms for a spectral fit",
            needed: MIN_PSD_ENSEMBLE,
            got: ensemble.len(),
        });
    }
    let mean = mean_periodogram(ensemble)?;
    let points: Vec<(f64, f64)> = mean
        .frequencies
        .iter()
        .zip(&mean.power)
        .filter(|(f, p)| **f > 0.0 && **f >= band.0 && **f <= band.1 && **p > 0.0)
        .map(|(f, p)| (f.ln(), p.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::EmptyBand {
            lo: band.0,
            hi: band.1,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

/// Mean, sample standard deviation and the values they summarize.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub values: Vec<f64>,
}

impl EnsembleStats {
    /// Two-pass mean and (n − 1)-normalized standard deviation. A single
    /// value has std 0.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NotEnoughData {
                what: "ensemble values",
                needed: 1,
                got: 0,
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            count: values.len(),
            values,
        })
    }
}

/// Sum of the running state cost over every plant step of the run.
pub fn accumulated_cost(log: &RunLog) -> f64 {
    log.accumulated_cost()
}

/// Unbiased per-timestep variance across rollouts of one scalar coordinate.
pub fn exploration_variance(rollouts: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rollouts.len() < 2 {
        return Err(Error::NotEnoughData {
            what: "rollouts for a variance",
            needed: 2,
            got: rollouts.len(),
        });
    }
    let len = rollouts[0].len();
    if let Some(bad) = rollouts.iter().find(|r| r.len() != len) {
        return Err(Error::ShapeMismatch {
            what: "rollout length",
            expected: len,
            actual: bad.len(),
        });
    }
    let n = rollouts.len() as f64;
    Ok((0..len)
        .map(|t| {
            let mean = rollouts.iter().map(|r| r[t]).sum::<f64>() / n;
            rollouts.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect())
}

/// Selects coordinate `coord` from state rollouts shaped `[sample][t][state]`.
pub fn select_coordinate(rollouts: &[Vec<Vec<f64>>], coord: usize) -> Vec<Vec<f64>> {
    rollouts
        .iter()
        .map(|r| r.iter().map(|x| x[coord]).collect())
        .collect()
}

/// Statistic and two-sided p-value of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Welch's unequal-variance t-test for equal means.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::NotEnoughData {
            what: "observations per group",
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let sa = EnsembleStats::from_values(a.to_vec())?;
    let sb = EnsembleStats::from_values(b.to_vec())?;
    let va = sa.std * sa.std / a.len() as f64;
    let vb = sb.std * sb.std / b.len() as f64;
    let se = (va + vb).sqrt();
    if se == 0.0 {
        let p = if sa.mean == sb.mean { 1.0 } else { 0.0 };
        return Ok(TestOutcome {
            statistic: 0.0,
            p_value: p,
        });
    }
    let t = (sa.mean - sb.mean) / se;
    let dof = (va + vb).powi(2)
        / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidConfig(format!("t distribution: {e}")))?;
    Ok(TestOutcome {
        statistic: t,
        p_value: 2.0 * (1.0 - dist.cdf(t.abs())),
    })
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::NotEnoughData {
            what: "observations per group",
            needed: 1,
            got: 0,
        });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(TestOutcome {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `Q_KS(λ) = 2·Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_signal_is_all_dc() {
        let p = periodogram(&[2.0; 16], 0.1).unwrap();
        assert!((p.power[0] - 64.0).abs() < 1e-9);
        assert!(p.power[1..].iter().all(|&v| v < 1e-20));
        assert_eq!(p.frequencies.len(), 9);
        assert!((p.frequencies[8] - 5.0).abs() < 1e-12);
        assert!((p.segment_seconds - 1.6).abs() < 1e-12);
    }

    #[test]
    fn cosine_concentrates_in_its_bin() {
        let k = 64;
        let signal: Vec<f64> = (0..k).map(|t| (2.0 * PI * 5.0 * t as f64 / k as f64).cos()).collect();
        let p = periodogram(&signal, 1.0).unwrap();
        let peak = p.power[5];
        for (n, &v) in p.power.iter().enumerate() {
            if n != 5 {
                assert!(v / peak < 1e-20, "bin {n}: {v}");
            }
        }
    }

    #[test]
    fn parseval() {
        let signal: Vec<f64> = (0..37).map(|t| ((t * t) as f64 * 0.37).sin() + 0.2).collect();
        let p = periodogram(&signal, 0.5).unwrap();
        // one-sided folding: every bin but DC (and Nyquist, even K) appears twice
        let k = signal.len();
        let folded: f64 = p
            .power
            .iter()
            .enumerate()
            .map(|(n, v)| if n == 0 || (k % 2 == 0 && n == k / 2) { *v } else { 2.0 * v })
            .sum();
        let energy: f64 = signal.iter().map(|x| x * x).sum();
        assert!((folded / k as f64 - energy / k as f64).abs() < 1e-9 * energy);
        assert!(periodogram(&[1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn ensemble_stats_two_pass() {
        let s = EnsembleStats::from_values(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.count, 4);
        assert_eq!(EnsembleStats::from_values(vec![3.0]).unwrap().std, 0.0);
        assert!(EnsembleStats::from_values(vec![]).is_err());
    }

    #[test]
    fn exploration_variance_examples() {
        let same = vec![vec![1.0, 2.0, 3.0]; 5];
        assert!(exploration_variance(&same).unwrap().iter().all(|&v| v == 0.0));
        let c = 1.5;
        let pm = vec![vec![c; 4], vec![-c; 4]];
        assert!(exploration_variance(&pm).unwrap().iter().all(|&v| (v - 2.0 * c * c).abs() < 1e-15));
        assert!(exploration_variance(&[vec![1.0]]).is_err());
        assert!(exploration_variance(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn accumulated_cost_examples() {
        let mut log = RunLog::new(0.015, 2, 1);
        log.push(vec![-9.0, 0.0], vec![0.0], 125.0);
        log.push(vec![-9.0, 0.0], vec![0.0], 125.0);
        assert_eq!(accumulated_cost(&log), 250.0);
    }

    #[test]
    fn fit_needs_enough_periodograms_and_bins() {
        let p = periodogram(&[1.0, -1.0, 0.5, 0.2, 0.1, 0.0, 0.3, -0.2], 1.0).unwrap();
        let few = vec![p.clone(); 10];
        assert!(fit_psd_exponent(&few, (0.1, 0.5)).is_err());
        let many = vec![p; 100];
        assert!(matches!(fit_psd_exponent(&many, (0.6, 0.9)), Err(Error::EmptyBand { .. })));
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let frequencies: Vec<f64> = (0..33).map(|n| n as f64 / 64.0).collect();
        let power = frequencies.iter().map(|f| if *f > 0.0 { f.powf(-1.7) } else { 1.0 }).collect();
        let p = Periodogram { frequencies, power, segment_seconds: 64.0 };
        let g = fit_psd_exponent(&vec![p; 100], (0.02, 0.5)).unwrap();
        assert!((g - 1.7).abs() < 1e-12);
    }

    #[test]
    fn welch_and_ks_sanity() {
        let a: Vec<f64> = (0..200).map(|i| (i as f64 * 0.618).fract()).collect();
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.414 + 0.1).fract()).collect();
        assert!(welch_t_test(&a, &b).unwrap().p_value > 0.05);
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.05);
        let shifted: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(welch_t_test(&a, &shifted).unwrap().p_value < 1e-6);
        assert!(ks_two_sample(&a, &shifted).unwrap().p_value < 1e-6);
    }
}
