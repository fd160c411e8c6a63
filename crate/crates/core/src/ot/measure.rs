use crate::error::{LabError, Result};
use crate::geometry::{euclid_dist_raw, torus_dist_raw, PhaseState, TorusPoint, Velocity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Phase,
    Position,
    Velocity,
}

/// Equal-weight point cloud stored flat. Phase points are laid out as
/// `[x₁..x_d, y₁..y_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    space: Space,
    dim: usize,
    data: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds a measure from flat coordinates; positions must already lie in `[0, 1)`.
    pub fn from_flat(space: Space, dim: usize, data: Vec<f64>) -> Result<Self> {
        let stride = if space == Space::Phase { 2 * dim } else { dim };
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(stride) {
            return Err(LabError::invalid("empty measure or ragged coordinates"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { context: "empirical measure" });
        }
        Ok(EmpiricalMeasure { space, dim, data })
    }

    pub fn from_phase(points: &[PhaseState]) -> Result<Self> {
        let dim = points.first().map_or(0, PhaseState::dim);
        let mut data = Vec::with_capacity(points.len() * 2 * dim);
        for p in points {
            if p.dim() != dim {
                return Err(LabError::DimensionMismatch { expected: dim, got: p.dim() });
            }
            data.extend_from_slice(p.position.coords());
            data.extend_from_slice(p.velocity.coords());
        }
        Self::from_flat(Space::Phase, dim, data)
    }

    pub fn from_positions(points: &[TorusPoint]) -> Result<Self> {
        let dim = points.first().map_or(0, TorusPoint::dim);
        if points.iter().any(|p| p.dim() != dim) {
            return Err(LabError::invalid("positions of mixed dimension"));
        }
        Self::from_flat(Space::Position, dim, points.iter().flat_map(|p| p.coords().iter().copied()).collect())
    }

    pub fn from_velocities(points: &[Velocity]) -> Result<Self> {
        let dim = points.first().map_or(0, Velocity::dim);
        if points.iter().any(|p| p.dim() != dim) {
            return Err(LabError::invalid("velocities of mixed dimension"));
        }
        Self::from_flat(Space::Velocity, dim, points.iter().flat_map(|p| p.coords().iter().copied()).collect())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Dimension `d` of the underlying torus.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn stride(&self) -> usize {
        if self.space == Space::Phase {
            2 * self.dim
        } else {
            self.dim
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.stride()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    /// Scalar samples of a one-dimensional measure.
    pub fn scalars(&self) -> Option<&[f64]> {
        (self.stride() == 1).then_some(self.data.as_slice())
    }

    #[inline]
    pub fn ground_cost(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.space {
            Space::Phase => {
                let d = self.dim;
                torus_dist_raw(&a[..d], &b[..d]) + euclid_dist_raw(&a[d..], &b[d..])
            }
            Space::Position => torus_dist_raw(a, b),
            Space::Velocity => euclid_dist_raw(a, b),
        }
    }

    /// Row-major `n × n` matrix of ground costs.
    pub fn cost_matrix(&self, other: &EmpiricalMeasure) -> Vec<f64> {
        let n = self.len();
        let m = other.len();
        let mut c = Vec::with_capacity(n * m);
        for i in 0..n {
            let a = self.point(i);
            c.extend((0..m).map(|j| self.ground_cost(a, other.point(j))));
        }
        c
    }

    fn project(&self, space: Space, offset: usize) -> Result<Self> {
        if self.space != Space::Phase {
            return Err(LabError::SpaceMismatch("marginals exist only for phase-space clouds".into()));
        }
        let d = self.dim;
        let data = (0..self.len()).flat_map(|i| self.point(i)[offset..offset + d].to_vec()).collect();
        Self::from_flat(space, d, data)
    }

    pub fn position_marginal(&self) -> Result<Self> {
        self.project(Space::Position, 0)
    }

    pub fn velocity_marginal(&self) -> Result<Self> {
        self.project(Space::Velocity, self.dim)
    }

    /// The sub-cloud at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let data = indices.iter().flat_map(|&i| self.point(i).to_vec()).collect();
        EmpiricalMeasure { space: self.space, dim: self.dim, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_cost_and_marginals() {
        let mu = EmpiricalMeasure::from_flat(Space::Phase, 1, vec![0.1, 1.0, 0.9, -1.0]).unwrap();
        assert_eq!(mu.len(), 2);
        let c = mu.cost_matrix(&mu);
        assert!((c[1] - (0.2 + 2.0)).abs() < 1e-15);
        assert_eq!(mu.position_marginal().unwrap().scalars().unwrap(), &[0.1, 0.9]);
        assert_eq!(mu.velocity_marginal().unwrap().scalars().unwrap(), &[1.0, -1.0]);
        assert!(EmpiricalMeasure::from_flat(Space::Phase, 1, vec![0.1]).is_err());
    }
}
