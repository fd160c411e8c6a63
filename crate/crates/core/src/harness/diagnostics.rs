use serde::Serialize;

use super::config::ExperimentConfig;
use super::fit::{fit_loglog, LogLogFit};
use super::report::{Check, Report};
use crate::coupling::{run_coupling, CouplingConfig, CouplingSummary};
use crate::error::Result;
use crate::exec::Execution;
use crate::sde::noise::derive_seed;

/// Largest acceptable log-log slope of the coupling errors against γ.
pub const E1_SLOPE_MAX: f64 = -0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingDiagnostics {
    pub summaries: Vec<CouplingSummary>,
    pub e1_fit: Option<LogLogFit>,
    pub e2_fit: Option<LogLogFit>,
    pub e3_fit: Option<LogLogFit>,
    pub report: Report,
}

impl CouplingDiagnostics {
    pub fn csv(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "gamma",
            "t",
            "R",
            "e1_mean",
            "e1_se",
            "e2_mean",
            "e2_se",
            "e3_mean",
            "e3_se",
            "max_abs_corr_w_a",
        ];
        let rows = self
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.gamma.to_string(),
                    s.t.to_string(),
                    s.replicas.to_string(),
                    s.e1.mean.to_string(),
                    s.e1.se.to_string(),
                    s.e2.mean.to_string(),
                    s.e2.se.to_string(),
                    s.e3.mean.to_string(),
                    s.e3.se.to_string(),
                    s.max_abs_corr.to_string(),
                ]
            })
            .collect();
        (header, rows)
    }
}

fn fit_of(summaries: &[CouplingSummary], f: impl Fn(&CouplingSummary) -> f64) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = summaries.iter().map(|s| (s.gamma, f(s))).collect();
    fit_loglog(&pts).ok()
}

/// Runs the coupling over every configured γ and checks the velocity bound,
/// the covariance of `A_t`, the independence of `W_t` and `A_t`, and the
/// decay of `E dist(X_{γt}, W_t)`.
pub fn run_coupling_diagnostics(cfg: &ExperimentConfig, exec: Execution) -> Result<CouplingDiagnostics> {
    cfg.validate()?;
    let mut report = Report::new("coupling-diagnostics");
    let mut summaries = Vec::with_capacity(cfg.gammas.len());
    for &gamma in &cfg.gammas {
        let m = cfg.model.build(gamma)?;
        let cc = CouplingConfig {
            t: cfg.coupling.t,
            gamma,
            delta: cfg.coupling.delta,
            replicas: cfg.coupling.replicas,
            projection: cfg.coupling.projection,
            ..CouplingConfig::new(cfg.coupling.t, gamma, cfg.coupling.replicas)
        };
        let (_, s) = run_coupling(&m, &cc, derive_seed(cfg.seed, gamma.to_bits()), exec)?;
        log::info!("gamma {gamma}: e1 {:.5} e2 {:.5} e3 {:.5} max|corr| {:.4}", s.e1.mean, s.e2.mean, s.e3.mean, s.max_abs_corr);
        report.push(
            Check::at_most(format!("gamma_{gamma}:e2_bound"), s.e2.mean - 3.0 * s.e2.se, s.e2_bound)
                .with_detail(format!("E|Y - A| {:.5} se {:.5}", s.e2.mean, s.e2.se)),
        );
        let worst_cov = s
            .a_cov
            .iter()
            .zip(&s.a_cov_se)
            .zip(&s.a_cov_target)
            .map(|((c, se), t)| (c - t).abs() / (3.0 * se))
            .fold(0.0, f64::max);
        report.push(
            Check::at_most(format!("gamma_{gamma}:a_covariance"), worst_cov, 1.0)
                .with_detail("largest |cov - target| in units of 3 SE"),
        );
        report.push(Check::at_most(format!("gamma_{gamma}:corr_w_a"), s.max_abs_corr, s.corr_threshold()));
        summaries.push(s);
    }
    let e1_fit = fit_of(&summaries, |s| s.e1.mean);
    let e2_fit = fit_of(&summaries, |s| s.e2.mean);
    let e3_fit = fit_of(&summaries, |s| s.e3.mean);
    if let Some(f) = &e1_fit {
        report.push(Check::at_most("e1_slope", f.slope, E1_SLOPE_MAX));
    }
    Ok(CouplingDiagnostics { summaries, e1_fit, e2_fit, e3_fit, report })
}
