use std::f64::consts::TAU;

use nalgebra::DMatrix;

use super::force::{ForceKind, Perturbation};
use super::trig::TrigPolynomial;
use super::ModelSpec;
use crate::error::{LabError, Result};
use crate::geometry::PhaseState;

/// Smooth test function for the generator. Any evaluator may be absent; the
/// generator reports which one it needed.
pub trait TestFunction {
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>>;
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>>;
    fn hess_y(&self, x: &[f64], y: &[f64]) -> Option<DMatrix<f64>>;
}

type VecFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Box<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

/// Closure-backed [`TestFunction`].
#[derive(Default)]
pub struct FnTestFunction {
    pub grad_x: Option<VecFn>,
    pub grad_y: Option<VecFn>,
    pub hess_y: Option<MatFn>,
}

impl TestFunction for FnTestFunction {
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        self.grad_x.as_ref().map(|f| f(x, y))
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        self.grad_y.as_ref().map(|f| f(x, y))
    }
    fn hess_y(&self, x: &[f64], y: &[f64]) -> Option<DMatrix<f64>> {
        self.hess_y.as_ref().map(|f| f(x, y))
    }
}

/// `Lf = y·∇ₓf + (F(x) − γy)·∇ᵧf + γ Σ²:∇²ᵧf` at `p`.
pub fn apply_generator(m: &ModelSpec, f: &dyn TestFunction, p: &PhaseState) -> Result<f64> {
    let d = m.dim();
    if p.dim() != d {
        return Err(LabError::DimensionMismatch { expected: d, got: p.dim() });
    }
    let x = p.position.coords();
    let y = p.velocity.coords();
    let gx = f.grad_x(x, y).ok_or(LabError::MissingDerivative("grad_x"))?;
    let gy = f.grad_y(x, y).ok_or(LabError::MissingDerivative("grad_y"))?;
    let hy = f.hess_y(x, y).ok_or(LabError::MissingDerivative("hess_y"))?;
    let force = m.force().eval(x);
    let gamma = m.gamma();
    let transport: f64 = y.iter().zip(&gx).map(|(a, b)| a * b).sum();
    let drift: f64 = (0..d).map(|i| (force[i] - gamma * y[i]) * gy[i]).sum();
    let diffusion = gamma * frobenius(m.sigma().sigma2(), &hy);
    Ok(transport + drift + diffusion)
}

fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Candidate log-density `H` with `e^{−H}` proposed as the stationary density.
pub trait DensityCandidate {
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn hess_y(&self, x: &[f64], y: &[f64]) -> DMatrix<f64>;
}

/// Residual of the stationary Fokker–Planck equation written for `H`:
/// `y·∇ₓH + (F − γy)·∇ᵧH + γd + γ|Σ∇ᵧH|² − γ Σ²:∇²ᵧH`.
pub fn stationarity_residual(m: &ModelSpec, h: &dyn DensityCandidate, p: &PhaseState) -> Result<f64> {
    let d = m.dim();
    if p.dim() != d {
        return Err(LabError::DimensionMismatch { expected: d, got: p.dim() });
    }
    let x = p.position.coords();
    let y = p.velocity.coords();
    let gx = h.grad_x(x, y);
    let gy = h.grad_y(x, y);
    let hy = h.hess_y(x, y);
    let gamma = m.gamma();
    let force = m.force().eval(x);
    let transport: f64 = y.iter().zip(&gx).map(|(a, b)| a * b).sum();
    let drift: f64 = (0..d).map(|i| (force[i] - gamma * y[i]) * gy[i]).sum();
    let mut sgy = vec![0.0; d];
    m.sigma().apply_sigma(&gy, &mut sgy);
    let quad: f64 = sgy.iter().map(|v| v * v).sum();
    let value = transport + drift + gamma * d as f64 + gamma * quad
        - gamma * frobenius(m.sigma().sigma2(), &hy);
    if !value.is_finite() {
        return Err(LabError::NonFinite { context: "stationarity residual" });
    }
    Ok(value)
}

/// `H(x, y) = U(x) + |Σ⁻¹(y − m)|² / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsGaussianDensity {
    pub potential: TrigPolynomial,
    pub velocity_mean: Vec<f64>,
    pub precision: DMatrix<f64>,
}

impl GibbsGaussianDensity {
    fn centered(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.velocity_mean).map(|(a, b)| a - b).collect()
    }
}

impl DensityCandidate for GibbsGaussianDensity {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = self.centered(y);
        let d = c.len();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += c[i] * self.precision[(i, j)] * c[j];
            }
        }
        self.potential.value(x) + 0.5 * q
    }
    fn grad_x(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        self.potential.gradient(x)
    }
    fn grad_y(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        let c = self.centered(y);
        let d = c.len();
        (0..d).map(|i| (0..d).map(|j| self.precision[(i, j)] * c[j]).sum()).collect()
    }
    fn hess_y(&self, _x: &[f64], _y: &[f64]) -> DMatrix<f64> {
        self.precision.clone()
    }
}

/// Closed-form stationary density `e^{−H} / Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDensity {
    pub log_density: GibbsGaussianDensity,
    /// `Z = (2π)^{d/2} det Σ ∫ e^{−U}`.
    pub normalization: f64,
    /// `∫_{T^d} e^{−U}` on its own.
    pub position_integral: f64,
    pub quadrature_nodes: usize,
}

impl StationaryDensity {
    pub fn pdf(&self, x: &[f64], y: &[f64]) -> f64 {
        (-self.log_density.value(x, y)).exp() / self.normalization
    }
}

/// Trapezoid nodes per axis used for torus normalization integrals.
/// Trapezoid sums are spectrally accurate for trigonometric integrands.
pub fn quadrature_nodes(dim: usize) -> usize {
    match dim {
        1 => 512,
        2 => 96,
        3 => 32,
        4 => 16,
        _ => 8,
    }
}

/// `∫_{T^d} f` by the uniform tensor trapezoid rule with `nodes` points per axis.
pub fn trapezoid_torus_integral(dim: usize, nodes: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let total = nodes.pow(dim as u32);
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    for idx in 0..total {
        let mut r = idx;
        for xi in x.iter_mut() {
            *xi = (r % nodes) as f64 / nodes as f64;
            r /= nodes;
        }
        acc += f(&x);
    }
    acc / total as f64
}

/// Closed-form stationary density for the tensorizing cases: gradient forces,
/// constant forces, and mixed forces with `τ = 0` and `∇U·η ≡ 0`.
pub fn equilibrium_density(m: &ModelSpec) -> Result<StationaryDensity> {
    let d = m.dim();
    let (potential, eta) = match m.force().kind() {
        ForceKind::Gradient { potential } => (potential.clone(), vec![0.0; d]),
        ForceKind::Constant { eta } => (TrigPolynomial::zero(d), eta.clone()),
        ForceKind::Mixed { potential, eta, tau, perturbation } => {
            let perturbation_vanishes = *tau == 0.0
                || matches!(perturbation, Perturbation::Rotational { potential: v, .. } if v.is_zero());
            if !perturbation_vanishes {
                return Err(LabError::NotApplicable("mixed force with a nonzero perturbation".into()));
            }
            // A constant perturbation just shifts η.
            let mut eta = eta.clone();
            if let Perturbation::Constant(c) = perturbation {
                for (e, ci) in eta.iter_mut().zip(c) {
                    *e += tau * ci;
                }
            }
            if !potential.is_invariant_along(&eta) {
                return Err(LabError::NotApplicable("∇U·η does not vanish identically".into()));
            }
            (potential.clone(), eta)
        }
    };
    let gamma = m.gamma();
    let nodes = quadrature_nodes(d);
    let position_integral = if potential.is_zero() {
        1.0
    } else {
        trapezoid_torus_integral(d, nodes, |x| (-potential.value(x)).exp())
    };
    let normalization = (TAU).powf(d as f64 / 2.0) * m.sigma().det() * position_integral;
    Ok(StationaryDensity {
        log_density: GibbsGaussianDensity {
            potential,
            velocity_mean: eta.iter().map(|e| e / gamma).collect(),
            precision: m.sigma().sigma_inv2().clone(),
        },
        normalization,
        position_integral,
        quadrature_nodes: nodes,
    })
}
