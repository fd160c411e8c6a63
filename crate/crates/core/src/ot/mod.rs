//! Wasserstein-1 distances between equal-weight empirical measures.
//!
//! Phase-space clouds use `dist(x, z) + |y − w|`, position clouds the torus
//! distance, and velocity clouds the Euclidean distance.

mod assignment;
mod gaussian;
mod measure;
mod sinkhorn;
mod sorted;

pub use assignment::{assignment_value, solve_assignment, w1_exact, EXACT_BUDGET};
pub use gaussian::w_gaussian;
pub use measure::{EmpiricalMeasure, Space};
pub use sinkhorn::{w1_sinkhorn, SinkhornOptions};
pub use sorted::{w1_sorted_1d, w1_sorted_circle, w1_sorted_line};

use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Assignment,
    Sorted1d,
    Sinkhorn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OTResult {
    /// Mean ground cost of the returned plan.
    pub value: f64,
    pub method: Method,
    /// `permutation[i]` is the point of the second measure matched to point `i`.
    pub permutation: Option<Vec<usize>>,
    /// Primal minus dual objective for the assignment solver (zero up to rounding).
    pub dual_gap: Option<f64>,
    pub iterations: Option<usize>,
}

/// Position-marginal and joint distances of two phase-space clouds, both from
/// the exact solver. The first never exceeds the second.
pub fn marginal_inequality_check(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<(f64, f64)> {
    if mu.space() != Space::Phase || nu.space() != Space::Phase {
        return Err(LabError::SpaceMismatch("marginal check needs phase-space clouds".into()));
    }
    let joint = w1_exact(mu, nu)?.value;
    let marginal = w1_exact(&mu.position_marginal()?, &nu.position_marginal()?)?.value;
    Ok((marginal, joint))
}

/// Rejects pairs of measures that cannot be compared by an equal-weight assignment.
pub(crate) fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.space() != nu.space() {
        return Err(LabError::SpaceMismatch(format!("{:?} vs {:?}", mu.space(), nu.space())));
    }
    if mu.dim() != nu.dim() {
        return Err(LabError::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    if mu.len() != nu.len() {
        return Err(LabError::UnequalSizes { left: mu.len(), right: nu.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PhaseState, TorusPoint, Velocity};
    use crate::sde::noise::stream_rng;
    use rand::Rng;

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<PhaseState> {
        (0..n)
            .map(|_| {
                PhaseState::new(
                    TorusPoint::new(vec![rng.random()]).unwrap(),
                    Velocity::new(vec![rng.random::<f64>() * 2.0 - 1.0]).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn marginal_examples() {
        let mut rng = stream_rng(2, 0, 0);
        let a = cloud(&mut rng, 16);
        let mu = EmpiricalMeasure::from_phase(&a).unwrap();
        assert_eq!(marginal_inequality_check(&mu, &mu).unwrap(), (0.0, 0.0));
        let shifted: Vec<PhaseState> = a
            .iter()
            .map(|p| PhaseState::new(p.position.clone(), Velocity::new(vec![p.velocity.coords()[0] + 0.5]).unwrap()).unwrap())
            .collect();
        let (m, j) = marginal_inequality_check(&mu, &EmpiricalMeasure::from_phase(&shifted).unwrap()).unwrap();
        assert_eq!(m, 0.0);
        assert!(j > 0.0);
        for _ in 0..5 {
            let mu = EmpiricalMeasure::from_phase(&cloud(&mut rng, 128)).unwrap();
            let nu = EmpiricalMeasure::from_phase(&cloud(&mut rng, 128)).unwrap();
            let (m, j) = marginal_inequality_check(&mu, &nu).unwrap();
            assert!(m <= j);
        }
    }
}
