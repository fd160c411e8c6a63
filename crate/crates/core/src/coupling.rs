//! Anticipative coupling of the kinetic process at time `γt` with an
//! overdamped process on `[0, t]` driven by the same Brownian path.
//!
//! Pass 1 runs the kinetic integrator for `N = γt / h` microsteps, accumulating
//! the velocity noise `A_t = Σ_k c^{N−1−k} s Σ ξ_k` (`c = e^{−γh}`,
//! `s = √(1 − c²)`) and the sums of the increments over macroscopic bins.
//! Pass 2 integrates `dW = F(W) ds + √2 dZ` with `ΔZ_j = Σ ΔB^(γ)_j − Δh_j A_t`,
//! where `ΔB^(γ)_j` is the bin sum divided by `√γ`, together with the
//! uncorrected reference `X̄` driven by `Σ ΔB^(γ)` alone.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec::Execution;
use crate::geometry::{torus_dist_raw, PhaseState, TorusPoint};
use crate::model::ModelSpec;
use crate::sde::noise::{purpose, stream_rng, BinAccumulator, NoisePath, NoiseSource, NoiseStream};
use crate::sde::{initial_state, step_size, LangevinIntegrator, Scheme, DEFAULT_H0, DEFAULT_STEP_FACTOR};
use crate::stats;

/// How the increments `Δh_j` of the anticipative drift are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Projection {
    /// Regression weights of each bin's increment on the discrete `A_t`; these
    /// make `Z` exactly uncorrelated with (hence independent of) `A_t`.
    #[default]
    Discrete,
    /// Differences of [`h_weight`] at the bin endpoints.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// Macroscopic horizon `t`.
    pub t: f64,
    pub gamma: f64,
    /// Macroscopic step `δ`; one bin per microstep when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    pub replicas: usize,
    #[serde(default)]
    pub projection: Projection,
    #[serde(default = "default_h0")]
    pub h0: f64,
}

fn default_h0() -> f64 {
    DEFAULT_H0
}

impl CouplingConfig {
    pub fn new(t: f64, gamma: f64, replicas: usize) -> Self {
        CouplingConfig { t, gamma, delta: None, replicas, projection: Projection::default(), h0: DEFAULT_H0 }
    }
}

/// `(2/γ)(e^{−γ²(t−s)} − e^{−γ²t}) / (1 − e^{−2γ²t})`, evaluated without
/// cancellation when `γ²t` is large or small.
pub fn h_weight(s: f64, t: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && t > 0.0) {
        return Err(LabError::invalid("h_weight needs γ > 0 and t > 0"));
    }
    if !(0.0..=t).contains(&s) {
        return Err(LabError::invalid(format!("s = {s} outside [0, {t}]")));
    }
    let g2 = gamma * gamma;
    let num = (-g2 * (t - s)).exp() * -(-g2 * s).exp_m1();
    let den = -(-2.0 * g2 * t).exp_m1();
    Ok(2.0 / gamma * num / den)
}

/// Resolved discretization of a coupling run.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPlan {
    pub gamma: f64,
    pub t: f64,
    /// Microstep, adjusted so that `γt / h` is an integer.
    pub h: f64,
    pub steps: usize,
    pub bin_steps: usize,
    pub bins: usize,
    /// Macroscopic step `δ = bin_steps · h / γ`.
    pub delta: f64,
    pub decay: f64,
    pub ou_scale: f64,
    /// Per-bin increments `Δh_j`; they sum to the total weight.
    pub weights: Vec<f64>,
}

impl CouplingPlan {
    pub fn new(cc: &CouplingConfig) -> Result<Self> {
        let (t, gamma) = (cc.t, cc.gamma);
        if !(t.is_finite() && t > 0.0 && gamma.is_finite() && gamma > 0.0) {
            return Err(LabError::invalid("coupling needs t > 0 and γ > 0"));
        }
        let h_max = step_size(gamma, cc.h0, DEFAULT_STEP_FACTOR);
        let (bins, bin_steps, h) = match cc.delta {
            None => {
                let n = (gamma * t / h_max).ceil() as usize;
                (n, 1, gamma * t / n as f64)
            }
            Some(delta) => {
                let ratio = t / delta;
                let bins = ratio.round();
                if !(delta > 0.0) || bins < 1.0 || (ratio - bins).abs() > 1e-9 * ratio {
                    return Err(LabError::Misaligned(format!("δ = {delta} does not divide t = {t}")));
                }
                let m = (gamma * delta / h_max).ceil() as usize;
                (bins as usize, m, gamma * delta / m as f64)
            }
        };
        let steps = bins * bin_steps;
        let decay = (-gamma * h).exp();
        let ou_scale = (-(-2.0 * gamma * h).exp_m1()).sqrt();
        let delta = bin_steps as f64 * h / gamma;
        let weights = match cc.projection {
            Projection::Discrete => {
                // Cov(ΔB^(γ)_j, A_t) / Var(A_t) per unit Σ².
                let var_a = -(-2.0 * gamma * h * steps as f64).exp_m1();
                let geometric = (-gamma * h * bin_steps as f64).exp_m1() / (-gamma * h).exp_m1();
                let pre = ou_scale * (h / gamma).sqrt() * geometric / var_a;
                (0..bins)
                    .map(|j| pre * (-gamma * h * (steps - (j + 1) * bin_steps) as f64).exp())
                    .collect()
            }
            Projection::Closed => {
                let edge = |j: usize| h_weight((j as f64 * delta).min(t), t, gamma);
                let mut w = Vec::with_capacity(bins);
                let mut prev = 0.0;
                for j in 0..bins {
                    let next = if j + 1 == bins { edge(bins)? } else { edge(j + 1)? };
                    w.push(next - prev);
                    prev = next;
                }
                w
            }
        };
        Ok(CouplingPlan { gamma, t, h, steps, bin_steps, bins, delta, decay, ou_scale, weights })
    }
}

/// Velocity noise `A` after all increments of `noise`, by the recursion
/// `A ← e^{−γh} A + √(1 − e^{−2γh}) Σ ΔB / √h` of the kinetic integrator.
pub fn accumulate_a(m: &ModelSpec, noise: &NoisePath) -> Result<Vec<f64>> {
    if noise.dim() != m.dim() {
        return Err(LabError::DimensionMismatch { expected: m.dim(), got: noise.dim() });
    }
    let it = LangevinIntegrator::new(m, Scheme::ExactOuSplitting, noise.step())?;
    let inv = 1.0 / noise.step().sqrt();
    let mut a = vec![0.0; m.dim()];
    let mut xi = vec![0.0; m.dim()];
    let mut sx = vec![0.0; m.dim()];
    for k in 0..noise.len() {
        ou_update(m, &mut a, noise.increment(k), inv, it.decay(), it.ou_scale(), &mut xi, &mut sx);
    }
    Ok(a)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn ou_update(m: &ModelSpec, a: &mut [f64], db: &[f64], inv_sqrt_h: f64, c: f64, s: f64, xi: &mut [f64], sx: &mut [f64]) {
    for (x, v) in xi.iter_mut().zip(db) {
        *x = v * inv_sqrt_h;
    }
    m.sigma().apply_sigma(xi, sx);
    for (ai, n) in a.iter_mut().zip(sx.iter()) {
        *ai = c * *ai + s * n;
    }
}

/// Velocity contribution of a constant force `η` after `steps` splitting
/// steps: `(1 + c)(hη/2)(1 − c^N)/(1 − c)`.
pub fn constant_force_term(eta: &[f64], gamma: f64, h: f64, steps: usize) -> Vec<f64> {
    let c = (-gamma * h).exp();
    let geometric = (-gamma * h * steps as f64).exp_m1() / (-gamma * h).exp_m1();
    eta.iter().map(|e| (1.0 + c) * 0.5 * h * e * geometric).collect()
}

/// Integrates the corrected overdamped process on the bins of `plan` and
/// returns its final lifted coordinates (not wrapped). With `path`, the
/// wrapped state after every bin is appended.
pub fn integrate_w(
    m: &ModelSpec,
    plan: &CouplingPlan,
    bin_sums: &[f64],
    a_t: &[f64],
    x0: &TorusPoint,
    mut path: Option<&mut Vec<TorusPoint>>,
) -> Result<Vec<f64>> {
    let d = m.dim();
    if x0.dim() != d || a_t.len() != d {
        return Err(LabError::DimensionMismatch { expected: d, got: x0.dim() });
    }
    if bin_sums.len() != plan.bins * d {
        return Err(LabError::Misaligned(format!(
            "expected {} bins, got {}",
            plan.bins,
            bin_sums.len() / d.max(1)
        )));
    }
    let inv_sqrt_g = 1.0 / plan.gamma.sqrt();
    let s2 = std::f64::consts::SQRT_2;
    let mut w = x0.coords().to_vec();
    let mut f = vec![0.0; d];
    let mut db = vec![0.0; d];
    let mut sdb = vec![0.0; d];
    for (j, chunk) in bin_sums.chunks(d).enumerate() {
        for (b, v) in db.iter_mut().zip(chunk) {
            *b = v * inv_sqrt_g;
        }
        m.sigma().apply_sigma(&db, &mut sdb);
        m.force().eval_into(&w, &mut f);
        let dh = plan.weights[j];
        for i in 0..d {
            w[i] += plan.delta * f[i] + s2 * (sdb[i] - dh * a_t[i]);
        }
        if let Some(p) = path.as_deref_mut() {
            p.push(TorusPoint::new(w.clone())?);
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Diverged { step: plan.bins });
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRecord {
    pub initial: PhaseState,
    /// `(X_{γt}, Y_{γt})`.
    pub langevin: PhaseState,
    pub a_t: Vec<f64>,
    pub w_t: TorusPoint,
    /// `W_t − X₀` on the universal cover.
    pub w_displacement: Vec<f64>,
    pub reference: TorusPoint,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub gamma: f64,
    pub t: f64,
    pub replicas: usize,
    pub delta: f64,
    pub h: f64,
    pub e1: MeanSe,
    pub e2: MeanSe,
    pub e3: MeanSe,
    pub mean_initial_speed: f64,
    /// `E|Y₀| e^{−γ²t} + ‖F‖_∞ / γ`.
    pub e2_bound: f64,
    /// Row-major empirical covariance of `A_t` with bootstrap SEs.
    pub a_cov: Vec<f64>,
    pub a_cov_se: Vec<f64>,
    /// `Σ² (1 − e^{−2γ²t})`, row-major.
    pub a_cov_target: Vec<f64>,
    /// Correlations between components of `W_t − X₀` (rows) and `A_t` (columns).
    pub corr_w_a: Vec<f64>,
    pub max_abs_corr: f64,
}

impl CouplingSummary {
    pub fn e2_bound_holds(&self) -> bool {
        self.e2.mean - 3.0 * self.e2.se <= self.e2_bound
    }

    pub fn a_cov_matches(&self) -> bool {
        self.a_cov
            .iter()
            .zip(&self.a_cov_se)
            .zip(&self.a_cov_target)
            .all(|((c, se), t)| (c - t).abs() <= 3.0 * se)
    }

    pub fn corr_threshold(&self) -> f64 {
        3.0 / (self.replicas as f64).sqrt()
    }

    pub fn independence_holds(&self) -> bool {
        self.max_abs_corr <= self.corr_threshold()
    }
}

/// One replica of the two-pass construction.
pub fn coupling_replica(m: &ModelSpec, plan: &CouplingPlan, seed: u64, replica: u64) -> Result<CouplingRecord> {
    let d = m.dim();
    let init = initial_state(m, &mut stream_rng(seed, purpose::INITIAL, replica));
    let mut noise = NoiseStream::new(seed, purpose::LANGEVIN, replica, d, plan.h);
    let mut it = LangevinIntegrator::new(m, Scheme::ExactOuSplitting, plan.h)?;
    let mut bins = BinAccumulator::with_capacity(d, plan.bin_steps, plan.bins);
    let inv = 1.0 / plan.h.sqrt();
    let (mut a, mut xi, mut sx, mut db) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut state = init.clone();
    for _ in 0..plan.steps {
        noise.next_increment(&mut db)?;
        bins.push(&db);
        it.step(&mut state, &db)?;
        ou_update(m, &mut a, &db, inv, plan.decay, plan.ou_scale, &mut xi, &mut sx);
    }
    let sums = bins.into_sums();
    let lifted = integrate_w(m, plan, &sums, &a, &init.position, None)?;
    let zero = vec![0.0; d];
    // With A = 0 the correction vanishes and the same routine gives X̄.
    let reference = integrate_w(m, plan, &sums, &zero, &init.position, None)?;
    let w_t = TorusPoint::new(lifted.clone())?;
    let reference = TorusPoint::new(reference)?;
    let e1 = torus_dist_raw(state.position.coords(), w_t.coords());
    let e2 = state.velocity.coords().iter().zip(&a).map(|(y, a)| (y - a) * (y - a)).sum::<f64>().sqrt();
    let e3 = torus_dist_raw(reference.coords(), w_t.coords());
    let w_displacement = lifted.iter().zip(init.position.coords()).map(|(w, x)| w - x).collect();
    Ok(CouplingRecord { initial: init, langevin: state, a_t: a, w_t, w_displacement, reference, e1, e2, e3 })
}

/// Runs `cc.replicas` independent replicas at damping `cc.gamma` (which
/// overrides the model's) and summarizes them.
pub fn run_coupling(
    m: &ModelSpec,
    cc: &CouplingConfig,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<CouplingRecord>, CouplingSummary)> {
    if cc.replicas < 2 {
        return Err(LabError::invalid("at least two replicas are needed"));
    }
    let m = m.with_gamma(cc.gamma)?;
    let plan = CouplingPlan::new(cc)?;
    let records = exec.try_map(cc.replicas, |r| coupling_replica(&m, &plan, seed, r as u64))?;
    let summary = summarize(&m, &plan, &records, seed, exec);
    Ok((records, summary))
}

fn summarize(m: &ModelSpec, plan: &CouplingPlan, records: &[CouplingRecord], seed: u64, exec: Execution) -> CouplingSummary {
    let d = m.dim();
    let r = records.len();
    let mean_se = |f: &dyn Fn(&CouplingRecord) -> f64, tag: u64| {
        let v: Vec<f64> = records.iter().map(f).collect();
        MeanSe { mean: stats::mean(&v), se: stats::bootstrap_mean_se(&v, seed ^ tag) }
    };
    let e1 = mean_se(&|c| c.e1, 1);
    let e2 = mean_se(&|c| c.e2, 2);
    let e3 = mean_se(&|c| c.e3, 3);
    let speeds: Vec<f64> = records.iter().map(|c| c.initial.velocity.norm()).collect();
    let mean_initial_speed = stats::mean(&speeds);
    let g2t = plan.gamma * plan.gamma * plan.t;
    let e2_bound = mean_initial_speed * (-g2t).exp() + m.force().sup_norm() / plan.gamma;

    let cov_of = |idx: &[usize], p: usize, q: usize| {
        let n = idx.len() as f64;
        let (mut sp, mut sq, mut spq) = (0.0, 0.0, 0.0);
        for &i in idx {
            let (a, b) = (records[i].a_t[p], records[i].a_t[q]);
            sp += a;
            sq += b;
            spq += a * b;
        }
        (spq - sp * sq / n) / (n - 1.0)
    };
    let all: Vec<usize> = (0..r).collect();
    let mut a_cov = Vec::with_capacity(d * d);
    let mut a_cov_se = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            a_cov.push(cov_of(&all, p, q));
            a_cov_se.push(stats::bootstrap_se(r, seed ^ (0x100 + (p * d + q) as u64), exec, |idx| cov_of(idx, p, q)));
        }
    }
    let shrink = -(-2.0 * g2t).exp_m1();
    let a_cov_target = m.sigma().sigma2().transpose().iter().map(|v| v * shrink).collect();

    let mut corr_w_a = Vec::with_capacity(d * d);
    for p in 0..d {
        let w: Vec<f64> = records.iter().map(|c| c.w_displacement[p]).collect();
        for q in 0..d {
            let a: Vec<f64> = records.iter().map(|c| c.a_t[q]).collect();
            corr_w_a.push(stats::correlation(&w, &a));
        }
    }
    let max_abs_corr = corr_w_a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    CouplingSummary {
        gamma: plan.gamma,
        t: plan.t,
        replicas: r,
        delta: plan.delta,
        h: plan.h,
        e1,
        e2,
        e3,
        mean_initial_speed,
        e2_bound,
        a_cov,
        a_cov_se,
        a_cov_target,
        corr_w_a,
        max_abs_corr,
    }
}
