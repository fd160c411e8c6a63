use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::integrator::{LangevinIntegrator, OverdampedIntegrator, Scheme};
use super::noise::{BinAccumulator, NoiseSource};
use crate::error::{LabError, Result};
use crate::geometry::{PhaseState, TorusPoint, Velocity};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub scheme: Scheme,
    pub h: f64,
    /// Physical horizon `T`.
    pub horizon: f64,
    #[serde(default)]
    pub burn_in_fraction: f64,
    /// Record every `stride`-th state after burn-in.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(h: f64, horizon: f64) -> Self {
        IntegratorConfig { scheme: Scheme::default(), h, horizon, burn_in_fraction: 0.0, stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(LabError::invalid(format!("step must be positive, got {}", self.h)));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(LabError::invalid(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(LabError::invalid("burn-in fraction must lie in [0, 1)"));
        }
        if self.stride == 0 {
            return Err(LabError::invalid("stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of microsteps `round(T / h)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }

    /// Number of recorded states, `floor((1 − b) T / (k h))`.
    pub fn recorded(&self) -> usize {
        ((1.0 - self.burn_in_fraction) * self.steps() as f64 / self.stride as f64 + 1e-9).floor() as usize
    }

    /// True when step `n` (1-based) is recorded. Recorded steps end at the
    /// final step and are `stride` apart.
    #[inline]
    fn records(&self, n: usize, total: usize, count: usize) -> bool {
        let back = total - n;
        back.is_multiple_of(self.stride) && back / self.stride < count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<PhaseState>,
    pub final_state: PhaseState,
    /// Flat `bins × d` sums of the driving increments, when binning was requested.
    pub bin_sums: Option<Vec<f64>>,
}

/// Runs the kinetic integrator for `cfg.steps()` steps and records the thinned
/// post-burn-in states. With `bin_steps = Some(m)` the increments are also
/// summed over consecutive bins of `m` steps.
pub fn simulate_trajectory(
    m: &ModelSpec,
    cfg: &IntegratorConfig,
    init: PhaseState,
    noise: &mut dyn NoiseSource,
    bin_steps: Option<usize>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if init.dim() != m.dim() {
        return Err(LabError::DimensionMismatch { expected: m.dim(), got: init.dim() });
    }
    if noise.dim() != m.dim() {
        return Err(LabError::DimensionMismatch { expected: m.dim(), got: noise.dim() });
    }
    if (noise.step() - cfg.h).abs() > 1e-15 * cfg.h {
        return Err(LabError::Misaligned(format!("noise step {} differs from h = {}", noise.step(), cfg.h)));
    }
    let total = cfg.steps();
    let count = cfg.recorded();
    if let Some(b) = bin_steps {
        if b == 0 || !total.is_multiple_of(b) {
            return Err(LabError::Misaligned(format!("{total} steps do not split into bins of {b}")));
        }
    }
    let mut bins = bin_steps.map(|b| BinAccumulator::with_capacity(m.dim(), b, total / b));
    let mut it = LangevinIntegrator::new(m, cfg.scheme, cfg.h)?;
    let mut state = init;
    let mut db = vec![0.0; m.dim()];
    let mut states = Vec::with_capacity(count);
    for n in 1..=total {
        noise.next_increment(&mut db)?;
        if let Some(acc) = bins.as_mut() {
            acc.push(&db);
        }
        it.step(&mut state, &db)?;
        if cfg.records(n, total, count) {
            states.push(state.clone());
        }
    }
    Ok(Trajectory { states, final_state: state, bin_sums: bins.map(BinAccumulator::into_sums) })
}

/// Overdamped analogue of [`simulate_trajectory`], recording positions only.
pub fn simulate_overdamped(
    m: &ModelSpec,
    cfg: &IntegratorConfig,
    init: TorusPoint,
    noise: &mut dyn NoiseSource,
) -> Result<Vec<TorusPoint>> {
    cfg.validate()?;
    if init.dim() != m.dim() || noise.dim() != m.dim() {
        return Err(LabError::DimensionMismatch { expected: m.dim(), got: init.dim().min(noise.dim()) });
    }
    let total = cfg.steps();
    let count = cfg.recorded();
    let mut it = OverdampedIntegrator::new(m, cfg.h)?;
    let mut z = init;
    let mut db = vec![0.0; m.dim()];
    let mut out = Vec::with_capacity(count);
    for n in 1..=total {
        noise.next_increment(&mut db)?;
        it.step(&mut z, &db)?;
        if cfg.records(n, total, count) {
            out.push(z.clone());
        }
    }
    Ok(out)
}

/// Default initial law: `x` uniform on `T^d`, `y ~ N(0, Σ²)`.
pub fn initial_state<R: Rng + ?Sized>(m: &ModelSpec, rng: &mut R) -> PhaseState {
    let d = m.dim();
    let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let xi: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut y = vec![0.0; d];
    m.sigma().apply_sigma(&xi, &mut y);
    PhaseState::new(
        TorusPoint::new(x).expect("uniform draws are finite"),
        Velocity::new(y).expect("gaussian draws are finite"),
    )
    .expect("dimensions agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{overdamped_density_1d, ForceKind, TrigPolynomial};
    use crate::sde::noise::{purpose, stream_rng, NoisePath, NoiseStream};
    use crate::sde::step_size;

    #[test]
    fn counting_and_zero_steps() {
        let m = ModelSpec::constant_1d(1.0, 2.0).unwrap();
        let init = initial_state(&m, &mut stream_rng(1, purpose::INITIAL, 0));
        let mut cfg = IntegratorConfig::new(0.01, 0.0);
        let mut noise = NoiseStream::new(1, purpose::LANGEVIN, 0, 1, 0.01);
        assert!(simulate_trajectory(&m, &cfg, init.clone(), &mut noise, None).unwrap().states.is_empty());
        cfg.horizon = 10.0;
        cfg.burn_in_fraction = 0.25;
        cfg.stride = 7;
        let t = simulate_trajectory(&m, &cfg, init.clone(), &mut noise, None).unwrap();
        assert_eq!(t.states.len(), (0.75 * 10.0 / (7.0 * 0.01)) as usize);
        assert_eq!(t.states.last().unwrap(), &t.final_state);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 3.0).unwrap();
        let init = initial_state(&m, &mut stream_rng(4, purpose::INITIAL, 2));
        let mut cfg = IntegratorConfig::new(1e-3, 2.0);
        cfg.stride = 10;
        let run = || {
            let mut noise = NoiseStream::new(4, purpose::LANGEVIN, 2, 1, 1e-3);
            simulate_trajectory(&m, &cfg, init.clone(), &mut noise, Some(50)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        let path = NoisePath::generate(4, 2, 1, 1e-3, cfg.steps());
        assert_eq!(a.bin_sums.unwrap(), path.bin_sums(50).unwrap());
    }

    #[test]
    fn exhausted_noise_is_an_error() {
        let m = ModelSpec::constant_1d(0.0, 1.0).unwrap();
        let path = NoisePath::generate(0, 0, 1, 0.1, 5);
        let cfg = IntegratorConfig::new(0.1, 1.0);
        let r = simulate_trajectory(&m, &cfg, initial_state(&m, &mut stream_rng(0, 0, 0)), &mut path.reader(), None);
        assert!(matches!(r, Err(LabError::NoiseExhausted { available: 5 })));
    }

    #[test]
    fn stiff_damping_stays_bounded() {
        for &gamma in &[32.0, 128.0] {
            let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, gamma).unwrap();
            let h = step_size(gamma, 1e-3, 0.5);
            let cfg = IntegratorConfig::new(h, gamma);
            let mut noise = NoiseStream::new(8, purpose::LANGEVIN, 0, 1, h);
            let init = initial_state(&m, &mut stream_rng(8, purpose::INITIAL, 0));
            let t = simulate_trajectory(&m, &cfg, init, &mut noise, None).unwrap();
            assert!(t.final_state.velocity.norm() < 10.0);
        }
    }

    /// Batch-means standard error of the mean.
    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let b = 20;
        let len = v.len() / b;
        let means: Vec<f64> = (0..b).map(|i| v[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64).collect();
        let mu = means.iter().sum::<f64>() / b as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b - 1) as f64;
        (mu, (var / b as f64).sqrt())
    }

    #[test]
    fn equilibrium_velocity_moment() {
        let m = ModelSpec::equilibrium_cosine_1d(1.0, 2.0).unwrap();
        let mut cfg = IntegratorConfig::new(1e-3, 4000.0);
        cfg.burn_in_fraction = 0.005;
        cfg.stride = 500;
        let mut noise = NoiseStream::new(21, purpose::LANGEVIN, 0, 1, cfg.h);
        let init = initial_state(&m, &mut stream_rng(21, purpose::INITIAL, 0));
        let t = simulate_trajectory(&m, &cfg, init, &mut noise, None).unwrap();
        let y2: Vec<f64> = t.states.iter().map(|s| s.velocity.coords()[0].powi(2)).collect();
        let (mu, se) = mean_and_se(&y2);
        assert!((mu - 1.0).abs() <= 3.0 * se, "E|Y|² = {mu} ± {se}");
        assert!(mu <= m.velocity_moment_bound() + 3.0 * se);
    }

    #[test]
    fn overdamped_histogram_matches_gibbs() {
        let m = ModelSpec::new(
            ForceKind::Gradient { potential: TrigPolynomial::cosine(1, 0, 1.0) },
            crate::model::DiffusionMatrix::identity(1),
            1.0,
        )
        .unwrap();
        let exact = overdamped_density_1d(&m, 2048).unwrap();
        let n = 10_000;
        let mut cfg = IntegratorConfig::new(2e-4, 0.0);
        cfg.stride = 1000;
        cfg.burn_in_fraction = 0.05;
        cfg.horizon = (n as f64 / 0.95).ceil() * cfg.stride as f64 * cfg.h;
        let mut noise = NoiseStream::new(3, purpose::OVERDAMPED, 0, 1, cfg.h);
        let z = simulate_overdamped(&m, &cfg, TorusPoint::origin(1), &mut noise).unwrap();
        assert!(z.len() >= n);
        // Circle W1 = min_α ∫|F − G − α|, α the median of F − G over the grid.
        let mut xs: Vec<f64> = z.iter().map(|p| p.coords()[0]).collect();
        xs.sort_by(f64::total_cmp);
        let grid = 4000;
        let diffs: Vec<f64> = (0..grid)
            .map(|i| {
                let x = (i as f64 + 0.5) / grid as f64;
                let emp = xs.partition_point(|&v| v <= x) as f64 / xs.len() as f64;
                emp - exact.cdf(x)
            })
            .collect();
        let mut sorted = diffs.clone();
        sorted.sort_by(f64::total_cmp);
        let alpha = sorted[grid / 2];
        let w1 = diffs.iter().map(|d| (d - alpha).abs()).sum::<f64>() / grid as f64;
        assert!(w1 <= 0.02, "W1 = {w1}");
    }
}
