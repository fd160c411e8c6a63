use serde::Serialize;

use super::config::{ExperimentConfig, OtMethod};
use super::fit::{fit_loglog, percentile_interval, LogLogFit};
use super::report::{Check, Report};
use crate::coupling::MeanSe;
use crate::error::Result;
use crate::exec::Execution;
use crate::ot::{w1_exact, w1_sinkhorn, w1_sorted_1d, EmpiricalMeasure, SinkhornOptions, EXACT_BUDGET};
use crate::sampling::{sample_mu_gamma, sample_mu_o_tensor_gauss, StationarySample};
use crate::sde::noise::{derive_seed, purpose, stream_rng};
use crate::stats;
use rand::Rng;

/// Accepted window for the fitted rate exponent.
pub const SLOPE_WINDOW: (f64, f64) = (-1.15, -0.80);

const TAG_REFERENCE: u64 = 0x5245_4600_0000;
const TAG_FLOOR: u64 = 0x464c_4f00_0000;

/// Phase-space W1 with the configured solver.
pub fn phase_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, method: OtMethod) -> Result<f64> {
    if method == OtMethod::Exact && mu.len() <= EXACT_BUDGET {
        return Ok(w1_exact(mu, nu)?.value);
    }
    let mut costs: Vec<f64> = (0..mu.len().min(256)).map(|i| mu.ground_cost(mu.point(i), nu.point(i))).collect();
    costs.sort_by(f64::total_cmp);
    let eps = 0.005 * costs[costs.len() / 2].max(1e-12);
    Ok(w1_sinkhorn(mu, nu, SinkhornOptions::new(eps))?.value)
}

/// W1 of the position and velocity marginals by sorted matching (`d = 1`).
fn marginal_distances(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<Option<(f64, f64)>> {
    if mu.dim() != 1 {
        return Ok(None);
    }
    let pos = w1_sorted_1d(&mu.position_marginal()?, &nu.position_marginal()?)?.value;
    let vel = w1_sorted_1d(&mu.velocity_marginal()?, &nu.velocity_marginal()?)?.value;
    Ok(Some((pos, vel)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub gamma: f64,
    pub w: MeanSe,
    /// Per-repetition joint estimates.
    pub w_reps: Vec<f64>,
    pub w_position: Option<MeanSe>,
    pub w_velocity: Option<MeanSe>,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub rows: Vec<RateRow>,
    pub n: usize,
    pub repetitions: usize,
    /// Distance between two independent samples of `μ_O ⊗ g_Σ`.
    pub floor: MeanSe,
    pub floor_reps: Vec<f64>,
    pub fit: Option<LogLogFit>,
    /// 95% bootstrap interval of the slope over replicate estimates.
    pub slope_ci: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl RateFit {
    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }

    /// Slope inside [`SLOPE_WINDOW`], and the largest γ either clear of the
    /// bias floor by two combined SEs or excluded from the fit.
    pub fn report(&self) -> Report {
        let mut r = Report::new("rate-sweep");
        let (lo, hi) = SLOPE_WINDOW;
        match (&self.fit, self.slope_ci) {
            (Some(f), ci) => {
                let detail = match ci {
                    Some((a, b)) => format!("slope {:.4} in [{lo}, {hi}]? 95% CI [{a:.4}, {b:.4}]", f.slope),
                    None => format!("slope {:.4}", f.slope),
                };
                // Distance outside the window; zero inside.
                let outside = (lo - f.slope).max(f.slope - hi).max(0.0);
                r.push(Check::at_most("slope_window", outside, 0.0).with_detail(detail));
            }
            (None, _) => r.push(Check::at_most("slope_window", f64::INFINITY, 0.0).with_detail("no fit")),
        }
        if let Some(top) = self.rows.iter().max_by(|a, b| a.gamma.total_cmp(&b.gamma)) {
            let margin = 2.0 * (top.w.se * top.w.se + self.floor.se * self.floor.se).sqrt();
            let gap = top.w.mean - self.floor.mean;
            let detail = format!(
                "gamma {}: W {:.5} floor {:.5} margin {:.5} included {}",
                top.gamma, top.w.mean, self.floor.mean, margin, top.included
            );
            let shortfall = if top.included { (margin - gap).max(0.0) } else { 0.0 };
            r.push(Check::at_most("largest_gamma_vs_floor", shortfall, 0.0).with_detail(detail));
        }
        r
    }

    pub fn csv(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "gamma",
            "n",
            "repetitions",
            "w_mean",
            "w_se",
            "floor_mean",
            "floor_se",
            "w_position_mean",
            "w_position_se",
            "w_velocity_mean",
            "w_velocity_se",
            "included",
        ];
        let opt = |m: &Option<MeanSe>| match m {
            Some(v) => (v.mean.to_string(), v.se.to_string()),
            None => (String::new(), String::new()),
        };
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let (pm, ps) = opt(&r.w_position);
                let (vm, vs) = opt(&r.w_velocity);
                vec![
                    r.gamma.to_string(),
                    self.n.to_string(),
                    self.repetitions.to_string(),
                    r.w.mean.to_string(),
                    r.w.se.to_string(),
                    self.floor.mean.to_string(),
                    self.floor.se.to_string(),
                    pm,
                    ps,
                    vm,
                    vs,
                    r.included.to_string(),
                ]
            })
            .collect();
        (header, rows)
    }
}

fn mean_se_boot(v: &[f64], seed: u64) -> MeanSe {
    MeanSe { mean: stats::mean(v), se: stats::bootstrap_mean_se(v, seed) }
}

/// Reference samples of `μ_O ⊗ g_Σ`, one per repetition, plus independent
/// copies for the bias floor. They do not depend on γ.
fn reference_samples(cfg: &ExperimentConfig, exec: Execution) -> Result<(Vec<StationarySample>, Vec<StationarySample>)> {
    let m = cfg.model.build(cfg.gammas[0])?;
    let r = cfg.repetitions;
    let all = exec.try_map(2 * r, |k| {
        let tag = if k < r { TAG_REFERENCE + k as u64 } else { TAG_FLOOR + (k - r) as u64 };
        // Inner work runs sequentially; the fan-out is across work items.
        sample_mu_o_tensor_gauss(&m, cfg.n, &cfg.sampler, derive_seed(cfg.seed, tag), Execution::Sequential)
    })?;
    let mut all = all.into_iter();
    let refs: Vec<_> = all.by_ref().take(r).collect();
    Ok((refs, all.collect()))
}

/// Estimates `W(μ_γ, μ_O ⊗ g_Σ)` for every configured γ with `repetitions`
/// independent sample pairs, then fits the log-log slope.
pub fn run_rate_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<RateFit> {
    cfg.validate()?;
    let r = cfg.repetitions;
    let (refs, floors) = reference_samples(cfg, exec)?;
    let floor_reps = exec.try_map(r, |k| phase_distance(&refs[k].measure, &floors[k].measure, cfg.ot_method))?;
    let floor = mean_se_boot(&floor_reps, derive_seed(cfg.seed, TAG_FLOOR));

    let g = cfg.gammas.len();
    let items = exec.try_map(g * r, |item| {
        let (gi, k) = (item / r, item % r);
        let gamma = cfg.gammas[gi];
        let m = cfg.model.build(gamma)?;
        let seed = derive_seed(derive_seed(cfg.seed, gamma.to_bits()), k as u64);
        let s = sample_mu_gamma(&m, cfg.n, &cfg.sampler, seed, Execution::Sequential)?;
        let w = phase_distance(&s.measure, &refs[k].measure, cfg.ot_method)?;
        let marg = marginal_distances(&s.measure, &refs[k].measure)?;
        log::info!("gamma {gamma} repetition {k}: W = {w:.5}");
        Ok::<_, crate::LabError>((w, marg))
    })?;

    let mut rows = Vec::with_capacity(g);
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        let chunk = &items[gi * r..(gi + 1) * r];
        let w_reps: Vec<f64> = chunk.iter().map(|c| c.0).collect();
        let bseed = derive_seed(cfg.seed, gamma.to_bits() ^ purpose::BOOTSTRAP);
        let marg = |f: fn(&(f64, f64)) -> f64, tag: u64| {
            let v: Option<Vec<f64>> = chunk.iter().map(|c| c.1.as_ref().map(f)).collect();
            v.map(|v| mean_se_boot(&v, bseed ^ tag))
        };
        rows.push(RateRow {
            gamma,
            w: mean_se_boot(&w_reps, bseed),
            w_reps,
            w_position: marg(|p| p.0, 1),
            w_velocity: marg(|p| p.1, 2),
            included: true,
        });
    }

    let mut warnings = Vec::new();
    let (fit, slope_ci) = if cfg.gammas.len() >= 3 {
        trim_against_floor(&mut rows, &floor, &mut warnings);
        fit_rows(&rows, cfg.seed)?
    } else {
        (None, None)
    };
    Ok(RateFit { rows, n: cfg.n, repetitions: r, floor, floor_reps, fit, slope_ci, warnings })
}

/// Drops the largest remaining γ while its estimate is within two combined
/// SEs of the bias floor, keeping at least three points.
pub fn trim_against_floor(rows: &mut [RateRow], floor: &MeanSe, warnings: &mut Vec<String>) {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].gamma.total_cmp(&rows[a].gamma));
    for &i in &order {
        if rows.iter().filter(|r| r.included).count() <= 3 {
            break;
        }
        let row = &mut rows[i];
        let margin = 2.0 * (row.w.se * row.w.se + floor.se * floor.se).sqrt();
        if row.w.mean - floor.mean >= margin {
            break;
        }
        row.included = false;
        let msg = format!(
            "gamma {} excluded from the fit: W = {:.5} is within {:.5} of the bias floor {:.5}",
            row.gamma, row.w.mean, margin, floor.mean
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
}

type FitWithInterval = (Option<LogLogFit>, Option<(f64, f64)>);

fn fit_rows(rows: &[RateRow], seed: u64) -> Result<FitWithInterval> {
    let used: Vec<&RateRow> = rows.iter().filter(|r| r.included).collect();
    let pts: Vec<(f64, f64)> = used.iter().map(|r| (r.gamma, r.w.mean)).collect();
    let fit = fit_loglog(&pts)?;
    let mut rng = stream_rng(seed, purpose::BOOTSTRAP, 0x5357);
    let mut slopes = Vec::with_capacity(stats::BOOTSTRAP_RESAMPLES);
    for _ in 0..stats::BOOTSTRAP_RESAMPLES {
        let resampled: Vec<(f64, f64)> = used
            .iter()
            .map(|r| {
                let k = r.w_reps.len();
                let mean = (0..k).map(|_| r.w_reps[rng.random_range(0..k)]).sum::<f64>() / k as f64;
                (r.gamma, mean)
            })
            .collect();
        if let Ok(f) = fit_loglog(&resampled) {
            slopes.push(f.slope);
        }
    }
    Ok((Some(fit), Some(percentile_interval(&slopes, 0.025, 0.975))))
}
