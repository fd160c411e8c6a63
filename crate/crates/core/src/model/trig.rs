use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{LabError, Result};

/// One Fourier mode `a cos(2π k·x) + b sin(2π k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Finite trigonometric polynomial on the unit torus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::invalid("trig polynomial dimension must be at least 1"));
        }
        for t in &terms {
            if t.k.len() != dim {
                return Err(LabError::DimensionMismatch { expected: dim, got: t.k.len() });
            }
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(LabError::NonFinite { context: "trig coefficients" });
            }
        }
        let terms = terms.into_iter().filter(|t| t.cos != 0.0 || t.sin != 0.0).collect();
        Ok(TrigPolynomial { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        TrigPolynomial { dim, terms: Vec::new() }
    }

    /// `amplitude * cos(2π x_axis)`; the workhorse potential of the tests.
    pub fn cosine(dim: usize, axis: usize, amplitude: f64) -> Self {
        let mut k = vec![0; dim];
        k[axis] = 1;
        TrigPolynomial { dim, terms: vec![TrigTerm { k, cos: amplitude, sin: 0.0 }] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    fn phase(k: &[i32], x: &[f64]) -> f64 {
        TAU * k.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let th = Self::phase(&t.k, x);
                t.cos * th.cos() + t.sin * th.sin()
            })
            .sum()
    }

    /// Writes `∇U(x)` into `out`.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            let (s, c) = Self::phase(&t.k, x).sin_cos();
            let w = TAU * (t.sin * c - t.cos * s);
            for (o, &ki) in out.iter_mut().zip(&t.k) {
                *o += w * ki as f64;
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        g
    }

    /// Row-major `d × d` Hessian.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d];
        for t in &self.terms {
            let (s, c) = Self::phase(&t.k, x).sin_cos();
            let w = -TAU * TAU * (t.cos * c + t.sin * s);
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += w * t.k[i] as f64 * t.k[j] as f64;
                }
            }
        }
        h
    }

    /// Upper bound on `sup_x |∇U(x)|` by the triangle inequality over modes.
    pub fn gradient_sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let kn = t.k.iter().map(|&k| (k as f64).powi(2)).sum::<f64>().sqrt();
                TAU * kn * t.cos.hypot(t.sin)
            })
            .sum()
    }

    /// True when every mode is orthogonal to `direction`, i.e. `∇U·η ≡ 0`.
    pub fn is_invariant_along(&self, direction: &[f64]) -> bool {
        let scale = direction.iter().map(|v| v.abs()).fold(0.0, f64::max);
        self.terms.iter().all(|t| {
            let dot: f64 = t.k.iter().zip(direction).map(|(&k, e)| k as f64 * e).sum();
            dot.abs() <= 1e-12 * scale.max(1.0)
        })
    }
}
