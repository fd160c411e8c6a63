//! Force fields, diffusion matrices, the kinetic generator, and the closed-form
//! stationary densities of the equilibrium and space-homogeneous cases.

mod density;
mod diffusion;
mod force;
mod overdamped1d;
mod trig;

pub use density::{
    apply_generator, equilibrium_density, stationarity_residual, trapezoid_torus_integral,
    DensityCandidate, FnTestFunction, GibbsGaussianDensity, StationaryDensity, TestFunction,
};
pub use diffusion::DiffusionMatrix;
pub use force::{ForceField, ForceKind, Perturbation};
pub use overdamped1d::{overdamped_density_1d, TabulatedDensity1d};
pub use trig::{TrigPolynomial, TrigTerm};

use crate::error::{LabError, Result};

/// Kinetic Langevin model on `T^d × R^d`:
/// `dX = Y dt`, `dY = F(X) dt − γ Y dt + √(2γ) Σ dB`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    force: ForceField,
    sigma: DiffusionMatrix,
    gamma: f64,
}

impl ModelSpec {
    pub fn new(kind: ForceKind, sigma: DiffusionMatrix, gamma: f64) -> Result<Self> {
        let force = ForceField::new(kind, &sigma)?;
        Self::from_parts(force, sigma, gamma)
    }

    pub fn from_parts(force: ForceField, sigma: DiffusionMatrix, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(LabError::invalid(format!("damping must be positive, got {gamma}")));
        }
        if force.dim() != sigma.dim() {
            return Err(LabError::DimensionMismatch { expected: sigma.dim(), got: force.dim() });
        }
        Ok(ModelSpec { force, sigma, gamma })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::from_parts(self.force.clone(), self.sigma.clone(), gamma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }
    pub fn force(&self) -> &ForceField {
        &self.force
    }
    pub fn sigma(&self) -> &DiffusionMatrix {
        &self.sigma
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Right-hand side of the stationary second-moment bound
    /// `E|Y|² ≤ 2 Tr(Σ²) + ‖F‖²_∞ / γ²`.
    pub fn velocity_moment_bound(&self) -> f64 {
        let f = self.force.sup_norm();
        2.0 * self.sigma.trace_sigma2() + f * f / (self.gamma * self.gamma)
    }

    /// Convenience constructors for the standard one-dimensional test models.
    pub fn equilibrium_cosine_1d(amplitude: f64, gamma: f64) -> Result<Self> {
        Self::new(
            ForceKind::Gradient { potential: TrigPolynomial::cosine(1, 0, amplitude) },
            DiffusionMatrix::identity(1),
            gamma,
        )
    }

    pub fn constant_1d(eta: f64, gamma: f64) -> Result<Self> {
        Self::new(ForceKind::Constant { eta: vec![eta] }, DiffusionMatrix::identity(1), gamma)
    }

    /// `F(x) = −U′(x) + η` with `U = amplitude·cos(2πx)` and `Σ = 1`.
    pub fn tilted_cosine_1d(amplitude: f64, eta: f64, gamma: f64) -> Result<Self> {
        Self::new(
            ForceKind::Mixed {
                potential: TrigPolynomial::cosine(1, 0, amplitude),
                eta: vec![eta],
                tau: 0.0,
                perturbation: Perturbation::default_for(1, TrigPolynomial::zero(1)),
            },
            DiffusionMatrix::identity(1),
            gamma,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_damping() {
        assert!(ModelSpec::constant_1d(1.0, 0.0).is_err());
        assert!(ModelSpec::constant_1d(1.0, -2.0).is_err());
        assert!(ModelSpec::constant_1d(1.0, f64::NAN).is_err());
        let m = ModelSpec::constant_1d(1.0, 2.0).unwrap();
        assert_eq!(m.with_gamma(8.0).unwrap().gamma(), 8.0);
    }

    #[test]
    fn moment_bound_formula() {
        let m = ModelSpec::tilted_cosine_1d(1.0, 1.0, 2.0).unwrap();
        let f = std::f64::consts::TAU + 1.0;
        assert!((m.velocity_moment_bound() - (2.0 + f * f / 4.0)).abs() < 1e-12);
    }
}
