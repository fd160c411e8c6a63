use super::config::{ExperimentConfig, ModelConfig};
use super::report::{Check, Report};
use super::sweep::{run_rate_sweep, RateFit};
use crate::error::{LabError, Result};
use crate::exec::Execution;
use crate::geometry::{PhaseState, TorusPoint, Velocity};
use crate::model::{equilibrium_density, overdamped_density_1d, stationarity_residual, ForceKind, ModelSpec};
use crate::ot::{w1_sorted_circle, w_gaussian};
use crate::sampling::{independence_diagnostic, sample_mu_gamma, SamplerConfig, StationarySample};
use crate::sde::noise::derive_seed;

const RESIDUAL_GRID: usize = 64;
const RESIDUAL_TOLERANCE: f64 = 1e-8;
const POSITION_W1_TOLERANCE: f64 = 0.02;
const VELOCITY_RANGE: f64 = 5.0;

/// Largest `|residual|` of the closed-form density on a 64 × 64 grid over the
/// first position axis and the first velocity axis (`|y| ≤ 5`); remaining
/// coordinates are held at fixed generic values.
pub fn residual_on_grid(m: &ModelSpec) -> Result<f64> {
    let dens = equilibrium_density(m)?;
    let d = m.dim();
    let mut worst = 0.0f64;
    for i in 0..RESIDUAL_GRID {
        for j in 0..RESIDUAL_GRID {
            let mut x: Vec<f64> = (0..d).map(|k| 0.137 * (k + 1) as f64).collect();
            let mut y: Vec<f64> = (0..d).map(|k| 0.3 - 0.2 * k as f64).collect();
            x[0] = i as f64 / RESIDUAL_GRID as f64;
            y[0] = -VELOCITY_RANGE + 2.0 * VELOCITY_RANGE * j as f64 / (RESIDUAL_GRID - 1) as f64;
            let p = PhaseState::new(TorusPoint::new(x)?, Velocity::new(y)?)?;
            worst = worst.max(stationarity_residual(m, &dens.log_density, &p)?.abs());
        }
    }
    Ok(worst)
}

/// Checks on the velocity marginal: mean `target_mean` and covariance `Σ²`,
/// each entry within 3 SE.
fn velocity_checks(report: &mut Report, m: &ModelSpec, s: &StationarySample, target_mean: &[f64], seed: u64) {
    let d = m.dim();
    for (j, target) in target_mean.iter().enumerate() {
        let est = s.mean_with_se(seed ^ j as u64, |p| p[d + j]);
        report.push(
            Check::at_most(format!("velocity_mean_{j}"), (est.mean - target).abs(), 3.0 * est.se)
                .with_detail(format!("mean {:.5} target {:.5} se {:.5}", est.mean, target, est.se)),
        );
    }
    let s2 = m.sigma().sigma2();
    for a in 0..d {
        for b in 0..d {
            let (ma, mb) = (target_mean[a], target_mean[b]);
            let est = s.mean_with_se(seed ^ (0x10 + a * d + b) as u64, |p| (p[d + a] - ma) * (p[d + b] - mb));
            report.push(
                Check::at_most(format!("velocity_cov_{a}{b}"), (est.mean - s2[(a, b)]).abs(), 3.0 * est.se)
                    .with_detail(format!("cov {:.5} target {:.5} se {:.5}", est.mean, s2[(a, b)], est.se)),
            );
        }
    }
}

/// Equilibrium case at `γ = cfg.gammas[0]`: position marginal against the
/// quadrature density (`d = 1`), velocity law `N(0, Σ²)`, position/velocity
/// independence, and the stationarity residual of the closed form.
pub fn validate_equilibrium(cfg: &ExperimentConfig, exec: Execution) -> Result<Report> {
    let gamma = cfg.gammas[0];
    let m = cfg.model.build(gamma)?;
    if !matches!(m.force().kind(), ForceKind::Gradient { .. }) {
        return Err(LabError::Config("validate-equilibrium needs a gradient force".into()));
    }
    let mut report = Report::new("validate-equilibrium");
    report.push(Check::at_most("stationarity_residual", residual_on_grid(&m)?, RESIDUAL_TOLERANCE));

    let seed = derive_seed(cfg.seed, 0x4551);
    let s = sample_mu_gamma(&m, cfg.n, &cfg.sampler, seed, exec)?;
    if m.dim() == 1 {
        let exact = overdamped_density_1d(&m, 4096)?.quantile_points(cfg.n);
        let x = s.measure.position_marginal()?;
        let w = w1_sorted_circle(x.scalars().expect("one-dimensional"), &exact)?;
        report.push(Check::at_most("position_marginal_w1", w, POSITION_W1_TOLERANCE));
    }
    velocity_checks(&mut report, &m, &s, &vec![0.0; m.dim()], seed);
    let ind = independence_diagnostic(&s)?;
    report.push(
        Check::at_most("independence_max_abs_corr", ind.max_abs, ind.threshold)
            .with_detail(format!("{} statistics", ind.statistics.len())),
    );
    Ok(report)
}

/// Space-homogeneous case `F ≡ η`: velocity law `N(η/γ, Σ²)` including
/// skewness and kurtosis, uniform positions, and the rate sweep against the
/// analytic distance `|η|/γ`.
pub fn validate_homogeneous(cfg: &ExperimentConfig, exec: Execution) -> Result<(Report, RateFit)> {
    let eta = match cfg.model.build(cfg.gammas[0])?.force().kind() {
        ForceKind::Constant { eta } => eta.clone(),
        _ => return Err(LabError::Config("validate-homogeneous needs a constant force".into())),
    };
    let mut report = Report::new("validate-homogeneous");
    for &gamma in &cfg.gammas {
        let m = cfg.model.build(gamma)?;
        let d = m.dim();
        let seed = derive_seed(cfg.seed, gamma.to_bits() ^ 0x484f);
        let s = sample_mu_gamma(&m, cfg.n, &cfg.sampler, seed, exec)?;
        let mean: Vec<f64> = eta.iter().map(|e| e / gamma).collect();
        let before = report.checks.len();
        velocity_checks(&mut report, &m, &s, &mean, seed);
        // Standardized third and fourth moments of the first velocity axis.
        let sd = m.sigma().sigma2()[(0, 0)].sqrt();
        let skew = s.mean_with_se(seed ^ 0x33, |p| ((p[d] - mean[0]) / sd).powi(3));
        let kurt = s.mean_with_se(seed ^ 0x44, |p| ((p[d] - mean[0]) / sd).powi(4));
        report.push(Check::at_most("velocity_skewness", skew.mean.abs(), 3.0 * skew.se));
        report.push(Check::at_most("velocity_kurtosis", (kurt.mean - 3.0).abs(), 3.0 * kurt.se));
        // Kolmogorov–Smirnov against the uniform law at the 1% level, per axis.
        for i in 0..d {
            let mut x: Vec<f64> = (0..s.len()).map(|k| s.measure.point(k)[i]).collect();
            x.sort_by(f64::total_cmp);
            let n = x.len() as f64;
            let ks = x
                .iter()
                .enumerate()
                .map(|(k, v)| ((k + 1) as f64 / n - v).max(v - k as f64 / n))
                .fold(0.0, f64::max);
            report.push(Check::at_most(format!("position_uniform_ks_{i}"), ks, 1.63 / s.ess.min(n).sqrt()));
        }
        for c in &mut report.checks[before..] {
            c.name = format!("gamma_{gamma}:{}", c.name);
        }
    }
    let sweep = run_rate_sweep(cfg, exec)?;
    for row in &sweep.rows {
        let d = eta.len();
        let identity = nalgebra::DMatrix::identity(d, d);
        let shifted: Vec<f64> = eta.iter().map(|e| e / row.gamma).collect();
        // Same covariance: the Gaussian formula reduces to the mean shift.
        let analytic = w_gaussian(&shifted, &identity, &vec![0.0; d], &identity)?;
        let tol = (0.15 / row.gamma).max(3.0 * row.w.se + sweep.floor.mean);
        report.push(
            Check::at_most(format!("gamma_{}:w_vs_analytic", row.gamma), (row.w.mean - analytic).abs(), tol)
                .with_detail(format!("W {:.5} analytic {:.5} floor {:.5}", row.w.mean, analytic, sweep.floor.mean)),
        );
    }
    Ok((report, sweep))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCase {
    pub label: String,
    pub model: ModelConfig,
    pub gamma: f64,
}

/// `E|Y|² ≤ 2 Tr(Σ²) + ‖F‖²_∞ / γ² + 3 SE` on one stationary sample.
pub fn moment_check(name: impl Into<String>, m: &ModelSpec, s: &StationarySample, seed: u64) -> Check {
    let d = m.dim();
    let est = s.mean_with_se(seed, |p| p[d..].iter().map(|y| y * y).sum());
    let bound = m.velocity_moment_bound();
    Check::at_most(name, est.mean, bound + 3.0 * est.se)
        .with_detail(format!("E|Y|^2 {:.5} se {:.5} bound {:.5}", est.mean, est.se, bound))
}

/// [`moment_check`] for each case.
pub fn validate_moments(cases: &[MomentCase], n: usize, sampler: &SamplerConfig, seed: u64, exec: Execution) -> Result<Report> {
    let mut report = Report::new("moment-bound");
    for (k, c) in cases.iter().enumerate() {
        let m = c.model.build(c.gamma)?;
        let s = sample_mu_gamma(&m, n, sampler, derive_seed(seed, 0x4d4f_0000 + k as u64), exec)?;
        report.push(moment_check(format!("{}:gamma_{}", c.label, c.gamma), &m, &s, seed ^ k as u64));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ForceConfig;

    #[test]
    fn closed_form_residual_vanishes_on_grid() {
        let m = ModelSpec::equilibrium_cosine_1d(1.0, 4.0).unwrap();
        assert!(residual_on_grid(&m).unwrap() <= RESIDUAL_TOLERANCE);
        let tilted = ModelSpec::tilted_cosine_1d(1.0, 1.0, 4.0).unwrap();
        assert!(residual_on_grid(&tilted).is_err());
    }

    #[test]
    fn small_equilibrium_run() {
        let cfg = ExperimentConfig {
            model: ModelConfig { force: ForceConfig::Cosine { amplitude: 1.0 }, sigma: None },
            gammas: vec![4.0],
            n: 2000,
            ..ExperimentConfig::default()
        };
        let r = validate_equilibrium(&cfg, Execution::default()).unwrap();
        // At n = 2000 the 0.02 position tolerance is not the target; the other checks are.
        for c in r.checks.iter().filter(|c| c.name != "position_marginal_w1") {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn moment_bound_on_small_samples() {
        let cases = vec![MomentCase {
            label: "mixed".into(),
            model: ModelConfig::default(),
            gamma: 8.0,
        }];
        let r = validate_moments(&cases, 500, &SamplerConfig::default(), 3, Execution::default()).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
