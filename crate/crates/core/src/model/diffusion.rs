use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{LabError, Result};

/// Constant symmetric positive definite diffusion matrix `Σ` with the derived
/// quantities the integrators and closed forms need.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    sigma: DMatrix<f64>,
    sigma2: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_inv2: DMatrix<f64>,
    trace_sigma2: f64,
    det: f64,
    op_norm2: f64,
    identity: bool,
}

impl DiffusionMatrix {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if d == 0 || sigma.ncols() != d {
            return Err(LabError::NotPositiveDefinite(format!(
                "expected a square matrix, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { context: "diffusion matrix" });
        }
        let scale = sigma.amax().max(1.0);
        if (&sigma - sigma.transpose()).amax() > 1e-12 * scale {
            return Err(LabError::NotPositiveDefinite("not symmetric".into()));
        }
        let eig = SymmetricEigen::new(sigma.clone());
        let min = eig.eigenvalues.min();
        if min <= 0.0 {
            return Err(LabError::NotPositiveDefinite(format!("smallest eigenvalue {min:e}")));
        }
        let max = eig.eigenvalues.max();
        let sigma_inv = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l))
            * eig.eigenvectors.transpose();
        let sigma2 = &sigma * &sigma;
        let sigma_inv2 = &sigma_inv * &sigma_inv;
        let identity = sigma == DMatrix::identity(d, d);
        Ok(DiffusionMatrix {
            trace_sigma2: sigma2.trace(),
            det: eig.eigenvalues.iter().product(),
            op_norm2: max * max,
            sigma,
            sigma2,
            sigma_inv,
            sigma_inv2,
            identity,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn scalar(dim: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * s)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(LabError::NotPositiveDefinite("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn sigma2(&self) -> &DMatrix<f64> {
        &self.sigma2
    }
    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }
    pub fn sigma_inv2(&self) -> &DMatrix<f64> {
        &self.sigma_inv2
    }
    pub fn trace_sigma2(&self) -> f64 {
        self.trace_sigma2
    }
    pub fn det(&self) -> f64 {
        self.det
    }
    /// Operator norm of `Σ²`.
    pub fn sigma2_norm(&self) -> f64 {
        self.op_norm2
    }
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `out = Σ v`.
    #[inline]
    pub fn apply_sigma(&self, v: &[f64], out: &mut [f64]) {
        if self.identity {
            out.copy_from_slice(v);
            return;
        }
        mat_vec(&self.sigma, v, out);
    }

    /// `out = Σ² v`.
    #[inline]
    pub fn apply_sigma2(&self, v: &[f64], out: &mut [f64]) {
        if self.identity {
            out.copy_from_slice(v);
            return;
        }
        mat_vec(&self.sigma2, v, out);
    }
}

#[inline]
pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (i, o) in out.iter_mut().enumerate().take(d) {
        let mut acc = 0.0;
        for (j, vj) in v.iter().enumerate() {
            acc += m[(i, j)] * vj;
        }
        *o = acc;
    }
}
