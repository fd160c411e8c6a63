use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// `log ŷ − log y` at each point, in input order.
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `log value` on `log γ`.
pub fn fit_loglog(rows: &[(f64, f64)]) -> Result<LogLogFit> {
    if rows.len() < 3 {
        return Err(LabError::invalid(format!("a log-log fit needs at least 3 points, got {}", rows.len())));
    }
    if let Some(&(g, v)) = rows.iter().find(|(g, v)| !(*g > 0.0 && *v > 0.0 && g.is_finite() && v.is_finite())) {
        return Err(LabError::invalid(format!("nonpositive point ({g}, {v})")));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(LabError::invalid("all γ values coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| intercept + slope * x - y).collect();
    Ok(LogLogFit { slope, intercept, residuals })
}

/// Percentile interval `[q_lo, q_hi]` of `values` (sorted copy, linear interpolation).
pub fn percentile_interval(values: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        if i + 1 < v.len() {
            v[i] * (1.0 - f) + v[i + 1] * f
        } else {
            v[i]
        }
    };
    (q(lo), q(hi))
}
