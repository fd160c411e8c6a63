use super::ModelSpec;
use crate::error::{LabError, Result};

const FLUX_TOLERANCE: f64 = 1e-3;
const SIMPSON_SUBCELLS: usize = 8;

/// Stationary density of the one-dimensional overdamped process tabulated on a
/// uniform periodic grid `x_i = i / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity1d {
    density: Vec<f64>,
    cdf: Vec<f64>,
    flux: f64,
}

impl TabulatedDensity1d {
    pub fn nodes(&self) -> usize {
        self.density.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.density
    }

    /// Constant probability flux `J = F p − σ² p′`.
    pub fn flux(&self) -> f64 {
        self.flux
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let n = self.density.len();
        let t = crate::geometry::wrap_coord(x) * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        self.density[i] * (1.0 - f) + self.density[(i + 1) % n] * f
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.density.len();
        let x = crate::geometry::wrap_coord(x);
        let t = x * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        let (a, b) = (self.density[i], self.density[(i + 1) % n]);
        self.cdf[i] + (a * f + 0.5 * (b - a) * f * f) / n as f64
    }

    /// Inverse CDF on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.density.len();
        let u = u.clamp(0.0, 1.0);
        let i = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => return i as f64 / n as f64 % 1.0,
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let (a, b) = (self.density[i], self.density[(i + 1) % n]);
        // Solve a f + (b − a) f²/2 = n (u − cdf_i) for f ∈ [0, 1].
        let r = (u - self.cdf[i]) * n as f64;
        let f = if (b - a).abs() < 1e-14 * a.abs().max(1e-300) {
            r / a
        } else {
            let disc = (a * a + 2.0 * (b - a) * r).max(0.0);
            (-a + disc.sqrt()) / (b - a)
        };
        ((i as f64 + f.clamp(0.0, 1.0)) / n as f64).min(1.0 - f64::EPSILON)
    }

    /// Deterministic `n`-point quantization at the mid-quantiles `(i + ½) / n`.
    pub fn quantile_points(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).collect()
    }
}

/// Solves the stationary overdamped equation on `T¹` for `F = −σ²U′ + c`.
///
/// With `Φ(x) = U(x) − U(0) − c x / σ²` the periodic solution is
/// `p(x) ∝ e^{−Φ(x)} ∫_x^{x+1} e^{Φ}`, which reduces to `e^{−U}` when `c = 0`.
pub fn overdamped_density_1d(m: &ModelSpec, nodes: usize) -> Result<TabulatedDensity1d> {
    if m.dim() != 1 {
        return Err(LabError::invalid("overdamped_density_1d requires d = 1"));
    }
    if nodes < 8 {
        return Err(LabError::invalid("at least 8 grid nodes are required"));
    }
    let (u, c) = m.force().decomposition_1d().expect("dimension checked");
    let s2 = m.sigma().sigma2()[(0, 0)];
    let u0 = u.value(&[0.0]);
    let phi = |x: f64| u.value(&[x]) - u0 - c * x / s2;
    let drift = c / s2;

    // Cumulative ∫_0^{x_i} e^{Φ} by composite Simpson inside each cell.
    let h = 1.0 / nodes as f64;
    let mut cum = vec![0.0; nodes + 1];
    let sub = SIMPSON_SUBCELLS;
    for i in 0..nodes {
        let a = i as f64 * h;
        let dh = h / sub as f64;
        let mut acc = 0.0;
        for k in 0..sub {
            let x0 = a + k as f64 * dh;
            acc += dh / 6.0 * (phi(x0).exp() + 4.0 * phi(x0 + 0.5 * dh).exp() + phi(x0 + dh).exp());
        }
        cum[i + 1] = cum[i] + acc;
    }
    let total = cum[nodes];
    let shift = (-drift).exp();
    let mut density: Vec<f64> = (0..nodes)
        .map(|i| {
            let x = i as f64 * h;
            let window = (total - cum[i]) + shift * cum[i];
            (-phi(x)).exp() * window
        })
        .collect();
    let mass: f64 = density.iter().sum::<f64>() * h;
    density.iter_mut().for_each(|p| *p /= mass);

    // Flux consistency check with periodic central differences.
    let force = |x: f64| m.force().eval(&[x])[0];
    let fluxes: Vec<f64> = (0..nodes)
        .map(|i| {
            let dp = (density[(i + 1) % nodes] - density[(i + nodes - 1) % nodes]) / (2.0 * h);
            force(i as f64 * h) * density[i] - s2 * dp
        })
        .collect();
    let mean_flux = fluxes.iter().sum::<f64>() / nodes as f64;
    let scale = (0..nodes)
        .map(|i| (force(i as f64 * h) * density[i]).abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let variation = fluxes.iter().map(|j| (j - mean_flux).abs()).fold(0.0, f64::max) / scale;
    if variation > FLUX_TOLERANCE {
        return Err(LabError::GridTooCoarse { variation, tolerance: FLUX_TOLERANCE });
    }

    let mut cdf = vec![0.0; nodes + 1];
    for i in 0..nodes {
        cdf[i + 1] = cdf[i] + 0.5 * h * (density[i] + density[(i + 1) % nodes]);
    }
    Ok(TabulatedDensity1d { density, cdf, flux: mean_flux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn gradient_force_gives_gibbs_density() {
        let m = ModelSpec::equilibrium_cosine_1d(1.0, 1.0).unwrap();
        let d = overdamped_density_1d(&m, 1024).unwrap();
        let z = 1.2660658777520082;
        for i in 0..1024 {
            let x = i as f64 / 1024.0;
            assert_abs_diff_eq!(d.values()[i], (-(TAU * x).cos()).exp() / z, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(d.flux(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn constant_force_gives_uniform_density() {
        let m = ModelSpec::constant_1d(2.5, 1.0).unwrap();
        let d = overdamped_density_1d(&m, 256).unwrap();
        for &p in d.values() {
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d.flux(), 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(d.quantile(0.3), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn tilted_force_is_not_gibbs() {
        let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 1.0).unwrap();
        let d = overdamped_density_1d(&m, 2048).unwrap();
        let z = 1.2660658777520082;
        let max_dev = (0..2048)
            .map(|i| {
                let x = i as f64 / 2048.0;
                (d.values()[i] - (-(TAU * x).cos()).exp() / z).abs()
            })
            .fold(0.0, f64::max);
        assert!(max_dev > 0.05, "deviation {max_dev}");
        assert!(d.flux() > 0.0);
        let spread = d.values().iter().cloned().fold(0.0, f64::max) - d.values().iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.5);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let m = ModelSpec::tilted_cosine_1d(3.0, 2.0, 1.0).unwrap();
        assert!(matches!(overdamped_density_1d(&m, 8), Err(LabError::GridTooCoarse { .. })));
        assert!(overdamped_density_1d(&m, 4096).is_ok());
    }

    #[test]
    fn quantiles_invert_cdf() {
        let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 1.0).unwrap();
        let d = overdamped_density_1d(&m, 512).unwrap();
        for k in 1..50 {
            let u = k as f64 / 50.0;
            assert_abs_diff_eq!(d.cdf(d.quantile(u)), u, epsilon = 1e-9);
        }
        let q = d.quantile_points(100);
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert!(q.iter().all(|&v| (0.0..1.0).contains(&v)));
    }
}
