use std::f64::consts::TAU;

use nalgebra::DMatrix;

use super::diffusion::DiffusionMatrix;
use super::trig::TrigPolynomial;
use crate::error::{LabError, Result};

/// Non-conservative perturbation `F̃` of a mixed force.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `F̃(x) = J ∇V(x)` with `J` antisymmetric (row-major, `d × d`).
    Rotational { j: Vec<f64>, potential: TrigPolynomial },
    /// Constant vector; the only option in one dimension.
    Constant(Vec<f64>),
}

impl Perturbation {
    /// Standard rotation on the first two axes for `d ≥ 2`, unit constant for `d = 1`.
    pub fn default_for(dim: usize, potential: TrigPolynomial) -> Self {
        if dim == 1 {
            return Perturbation::Constant(vec![1.0]);
        }
        let mut j = vec![0.0; dim * dim];
        j[1] = 1.0;
        j[dim] = -1.0;
        Perturbation::Rotational { j, potential }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForceKind {
    /// `F = −Σ²∇U`.
    Gradient { potential: TrigPolynomial },
    /// `F ≡ η`.
    Constant { eta: Vec<f64> },
    /// `F = −Σ²∇U + η + τ F̃`.
    Mixed { potential: TrigPolynomial, eta: Vec<f64>, tau: f64, perturbation: Perturbation },
}

impl ForceKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ForceKind::Gradient { .. } => "gradient",
            ForceKind::Constant { .. } => "constant",
            ForceKind::Mixed { .. } => "mixed",
        }
    }
}

/// Precomputed mode: `F` picks up `weight(x) * dir` where the weight is the
/// scalar derivative of the mode.
#[derive(Debug, Clone, PartialEq)]
struct Mode {
    k: Vec<f64>,
    cos: f64,
    sin: f64,
    dir: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    kind: ForceKind,
    dim: usize,
    modes: Vec<Mode>,
    offset: Vec<f64>,
    sup_bound: f64,
    sigma2: DMatrix<f64>,
}

impl ForceField {
    pub fn new(kind: ForceKind, sigma: &DiffusionMatrix) -> Result<Self> {
        let dim = sigma.dim();
        let mut modes = Vec::new();
        let mut offset = vec![0.0; dim];
        let mut sup = 0.0;

        let mut push_gradient_modes = |p: &TrigPolynomial, map: &dyn Fn(&[f64]) -> Vec<f64>, scale: f64| -> Result<()> {
            if p.dim() != dim {
                return Err(LabError::DimensionMismatch { expected: dim, got: p.dim() });
            }
            for t in p.terms() {
                let k: Vec<f64> = t.k.iter().map(|&v| v as f64).collect();
                let dir: Vec<f64> = map(&k).into_iter().map(|v| scale * TAU * v).collect();
                modes.push(Mode { k, cos: t.cos, sin: t.sin, dir });
            }
            Ok(())
        };
        let sigma2 = sigma.sigma2().clone();
        let minus_sigma2 = |k: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; k.len()];
            sigma.apply_sigma2(k, &mut out);
            out.iter().map(|v| -v).collect()
        };

        let check_vec = |v: &[f64], what: &'static str| -> Result<()> {
            if v.len() != dim {
                return Err(LabError::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LabError::NonFinite { context: what });
            }
            Ok(())
        };

        match &kind {
            ForceKind::Gradient { potential } => {
                push_gradient_modes(potential, &minus_sigma2, 1.0)?;
                sup += sigma.sigma2_norm() * potential.gradient_sup_bound();
            }
            ForceKind::Constant { eta } => {
                check_vec(eta, "eta")?;
                offset.copy_from_slice(eta);
                sup += norm(eta);
            }
            ForceKind::Mixed { potential, eta, tau, perturbation } => {
                check_vec(eta, "eta")?;
                if !tau.is_finite() {
                    return Err(LabError::NonFinite { context: "tau" });
                }
                push_gradient_modes(potential, &minus_sigma2, 1.0)?;
                sup += sigma.sigma2_norm() * potential.gradient_sup_bound();
                offset.copy_from_slice(eta);
                sup += norm(eta);
                match perturbation {
                    Perturbation::Constant(c) => {
                        check_vec(c, "perturbation")?;
                        for (o, ci) in offset.iter_mut().zip(c) {
                            *o += tau * ci;
                        }
                        sup += tau.abs() * norm(c);
                    }
                    Perturbation::Rotational { j, potential: v } => {
                        if dim < 2 {
                            return Err(LabError::invalid("rotational perturbation needs d >= 2"));
                        }
                        if j.len() != dim * dim {
                            return Err(LabError::DimensionMismatch { expected: dim * dim, got: j.len() });
                        }
                        for a in 0..dim {
                            for b in 0..dim {
                                if (j[a * dim + b] + j[b * dim + a]).abs() > 1e-12 {
                                    return Err(LabError::invalid("perturbation matrix J must be antisymmetric"));
                                }
                            }
                        }
                        let jm = DMatrix::from_row_slice(dim, dim, j);
                        let apply_j = |k: &[f64]| -> Vec<f64> {
                            (0..dim).map(|a| (0..dim).map(|b| jm[(a, b)] * k[b]).sum()).collect()
                        };
                        push_gradient_modes(v, &apply_j, *tau)?;
                        let jnorm = jm.singular_values().max();
                        sup += tau.abs() * jnorm * v.gradient_sup_bound();
                    }
                }
            }
        }

        Ok(ForceField { kind, dim, modes, offset, sup_bound: sup, sigma2 })
    }

    pub fn kind(&self) -> &ForceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on `‖F‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_bound
    }

    /// Replace the computed bound with a user-supplied one.
    pub fn with_sup_norm(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(LabError::invalid("force bound must be finite and nonnegative"));
        }
        self.sup_bound = bound;
        Ok(self)
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.offset);
        for m in &self.modes {
            let th = TAU * m.k.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>();
            let (s, c) = th.sin_cos();
            // d/dθ (a cos θ + b sin θ)
            let w = m.sin * c - m.cos * s;
            for (o, di) in out.iter_mut().zip(&m.dir) {
                *o += w * di;
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Jacobian `∂F_a/∂x_b` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut jac = DMatrix::zeros(d, d);
        for m in &self.modes {
            let th = TAU * m.k.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>();
            let (s, c) = th.sin_cos();
            let dw = -TAU * (m.sin * s + m.cos * c);
            for a in 0..d {
                for b in 0..d {
                    jac[(a, b)] += dw * m.dir[a] * m.k[b];
                }
            }
        }
        jac
    }

    pub fn sigma2(&self) -> &DMatrix<f64> {
        &self.sigma2
    }

    /// Potential part `U` and constant drift (nonzero only for constant/mixed kinds).
    pub fn potential(&self) -> Option<&TrigPolynomial> {
        match &self.kind {
            ForceKind::Gradient { potential } | ForceKind::Mixed { potential, .. } => Some(potential),
            ForceKind::Constant { .. } => None,
        }
    }

    /// In one dimension every supported force is `−σ²U′ + c`; returns `(U, c)`.
    pub fn decomposition_1d(&self) -> Option<(TrigPolynomial, f64)> {
        if self.dim != 1 {
            return None;
        }
        let u = self.potential().cloned().unwrap_or_else(|| TrigPolynomial::zero(1));
        Some((u, self.offset[0]))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
