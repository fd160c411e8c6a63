//! Small estimators shared by the samplers and the harness.

use rand::Rng;

use crate::exec::Execution;
use crate::sde::noise::{purpose, stream_rng};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return f64::NAN;
    }
    let mu = mean(v);
    v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64
}

/// Plug-in standard error of the mean.
pub fn std_error(v: &[f64]) -> f64 {
    (variance(v) / v.len() as f64).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Sample autocorrelation at lag `k`.
pub fn autocorrelation(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    if k >= n {
        return 0.0;
    }
    let mu = mean(v);
    let var: f64 = v.iter().map(|x| (x - mu) * (x - mu)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = (0..n - k).map(|i| (v[i] - mu) * (v[i + k] - mu)).sum();
    cov / var
}

/// Effective sample size by Geyer's initial positive sequence.
pub fn effective_sample_size(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 4 {
        return n as f64;
    }
    let mut tau = 1.0;
    let mut k = 1;
    while k + 1 < n {
        let pair = autocorrelation(v, k) + autocorrelation(v, k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    (n as f64 / tau).clamp(1.0, n as f64)
}

/// Bootstrap standard error of `stat` over resamples of `0..n`; resample `b`
/// draws from its own stream so the value does not depend on scheduling.
pub fn bootstrap_se<F>(n: usize, seed: u64, exec: Execution, stat: F) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    if n < 2 {
        return f64::NAN;
    }
    let values = exec.map(BOOTSTRAP_RESAMPLES, |b| {
        let mut rng = stream_rng(seed, purpose::BOOTSTRAP, b as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        stat(&idx)
    });
    variance(&values).sqrt()
}

/// Bootstrap standard error of the mean of `v`.
pub fn bootstrap_mean_se(v: &[f64], seed: u64) -> f64 {
    bootstrap_se(v.len(), seed, Execution::Sequential, |idx| {
        idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert_abs_diff_eq!(variance(&v), 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(correlation(&v, &[2.0, 4.0, 6.0, 8.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(correlation(&v, &[-1.0, -2.0, -3.0, -4.0]), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn bootstrap_tracks_plugin_se() {
        let mut rng = stream_rng(3, 0, 0);
        let v: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b = bootstrap_mean_se(&v, 11);
        let p = std_error(&v);
        assert!((b / p - 1.0).abs() < 0.2, "{b} vs {p}");
        assert_eq!(b, bootstrap_mean_se(&v, 11));
    }

    #[test]
    fn ess_of_ar1() {
        // AR(1) with φ = 0.5 has integrated time (1 + φ)/(1 − φ) = 3.
        let mut rng = stream_rng(5, 0, 0);
        let mut x = 0.0;
        let v: Vec<f64> = (0..200_000)
            .map(|_| {
                x = 0.5 * x + rng.sample::<f64, _>(rand_distr::StandardNormal);
                x
            })
            .collect();
        let ess = effective_sample_size(&v);
        assert!((v.len() as f64 / ess - 3.0).abs() < 0.3, "{ess}");
        assert_abs_diff_eq!(autocorrelation(&v, 1), 0.5, epsilon = 0.01);
    }
}
