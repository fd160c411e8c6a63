use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{LabError, Result};

fn psd_sqrt(c: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let scale = c.amax().max(1.0);
    if (c - c.transpose()).amax() > 1e-12 * scale {
        return Err(LabError::NotPositiveDefinite(format!("{what} is not symmetric")));
    }
    let eig = SymmetricEigen::new(c.clone());
    if eig.eigenvalues.min() < -1e-12 * scale {
        return Err(LabError::NotPositiveDefinite(format!("{what} has a negative eigenvalue")));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Quadratic transport distance between `N(m₁, C₁)` and `N(m₂, C₂)`:
/// `√(|m₁ − m₂|² + Tr(C₁ + C₂ − 2 (C₂^{½} C₁ C₂^{½})^{½}))`.
/// It dominates the W1 distance between the same laws.
pub fn w_gaussian(m1: &[f64], c1: &DMatrix<f64>, m2: &[f64], c2: &DMatrix<f64>) -> Result<f64> {
    let d = m1.len();
    if m2.len() != d || c1.shape() != (d, d) || c2.shape() != (d, d) {
        return Err(LabError::DimensionMismatch { expected: d, got: m2.len() });
    }
    let r2 = psd_sqrt(c2, "second covariance")?;
    psd_sqrt(c1, "first covariance")?;
    let cross = psd_sqrt(&(&r2 * c1 * &r2), "cross term")?;
    let mean2: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let tr = c1.trace() + c2.trace() - 2.0 * cross.trace();
    Ok((mean2 + tr.max(0.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shifted_means() {
        let c = DMatrix::identity(1, 1);
        let (eta, gamma) = (1.0, 4.0);
        assert_abs_diff_eq!(w_gaussian(&[0.0], &c, &[eta / gamma], &c).unwrap(), 0.25, epsilon = 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_abs_diff_eq!(w_gaussian(&[1.0, 2.0], &s, &[1.0, 2.0], &s).unwrap(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn shrunken_covariance() {
        let s2 = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]);
        for &(gamma, t) in &[(1.0f64, 0.5f64), (2.0, 0.1), (1.0, 1.0)] {
            let f: f64 = 1.0 - (-2.0 * gamma * gamma * t).exp();
            let w = w_gaussian(&[0.0, 0.0], &(&s2 * f), &[0.0, 0.0], &s2).unwrap();
            // Commuting covariances: exact value √Tr(Σ²)·(1 − √f).
            let bound = s2.trace().sqrt() * (1.0 - f.sqrt());
            assert_abs_diff_eq!(w, bound, epsilon = 1e-8 * bound.max(1.0));
        }
        // Rounding in the matrix square root leaves ~1e-8 once the bound is negligible.
        let f = -(-24f64).exp_m1();
        assert!(w_gaussian(&[0.0, 0.0], &(&s2 * f), &[0.0, 0.0], &s2).unwrap() <= 1e-6);
        assert!(w_gaussian(&[0.0], &DMatrix::from_element(1, 1, -1.0), &[0.0], &DMatrix::identity(1, 1)).is_err());
    }
}
