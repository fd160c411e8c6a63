//! Unit torus `T^d = R^d / Z^d`, velocities, and the product metric on phase space.
//!
//! Positions are always stored by their canonical representative in `[0, 1)^d`.
//! The distance on the torus is the Euclidean length of the componentwise
//! minimal-image difference; phase space carries `dist(x, z) + |y - w|`.

use crate::error::{LabError, Result};

/// Reduce one coordinate into `[0, 1)`.
#[inline]
pub fn wrap_coord(v: f64) -> f64 {
    let r = v - v.floor();
    // `v - floor(v)` rounds up to 1.0 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Minimal-image absolute difference of two coordinates on the unit circle.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - d.round()).abs()
}

/// Torus distance on raw slices; callers guarantee equal lengths.
#[inline]
pub fn torus_dist_raw(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() == 1 {
        return circle_dist(a[0], b[0]);
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = circle_dist(*x, *y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance on raw slices; callers guarantee equal lengths.
#[inline]
pub fn euclid_dist_raw(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    /// Wraps arbitrary finite coordinates onto the torus.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(LabError::invalid("torus dimension must be at least 1"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { context: "torus coordinates" });
        }
        Ok(TorusPoint(coords.into_iter().map(wrap_coord).collect()))
    }

    pub fn origin(dim: usize) -> Self {
        TorusPoint(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Mutable access for integrators. Callers must re-wrap before handing the
    /// point to anything that relies on the canonical representative.
    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Velocity(Vec<f64>);

impl Velocity {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(LabError::invalid("velocity dimension must be at least 1"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite { context: "velocity" });
        }
        Ok(Velocity(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Velocity(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub position: TorusPoint,
    pub velocity: Velocity,
}

impl PhaseState {
    pub fn new(position: TorusPoint, velocity: Velocity) -> Result<Self> {
        check_dims(position.dim(), velocity.dim())?;
        Ok(PhaseState { position, velocity })
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.position.coords().iter().all(|v| v.is_finite())
            && self.velocity.coords().iter().all(|v| v.is_finite())
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LabError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Componentwise reduction mod 1.
pub fn wrap(v: &[f64]) -> Result<TorusPoint> {
    TorusPoint::new(v.to_vec())
}

pub fn torus_dist(a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(torus_dist_raw(a.coords(), b.coords()))
}

pub fn phase_dist(p: &PhaseState, q: &PhaseState) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    Ok(torus_dist_raw(p.position.coords(), q.position.coords())
        + euclid_dist_raw(p.velocity.coords(), q.velocity.coords()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tp(v: &[f64]) -> TorusPoint {
        TorusPoint::new(v.to_vec()).unwrap()
    }

    fn ps(x: &[f64], y: &[f64]) -> PhaseState {
        PhaseState::new(tp(x), Velocity::new(y.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(&[1.25]).unwrap().coords(), &[0.25]);
        assert_eq!(wrap(&[-0.25]).unwrap().coords(), &[0.75]);
        assert_eq!(wrap(&[0.0]).unwrap().coords(), &[0.0]);
        assert_eq!(wrap_coord(-1e-20), 0.0);
        assert!(wrap(&[f64::NAN]).is_err());
        assert!(wrap(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn torus_dist_examples() {
        assert_abs_diff_eq!(torus_dist(&tp(&[0.9]), &tp(&[0.1])).unwrap(), 0.2, epsilon = 1e-15);
        let a = tp(&[0.3, 0.7]);
        assert_eq!(torus_dist(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(
            torus_dist(&tp(&[0.0, 0.0]), &tp(&[0.5, 0.5])).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            torus_dist(&tp(&[0.1]), &tp(&[0.1, 0.2])),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn phase_dist_examples() {
        let p = ps(&[0.3], &[0.4]);
        assert_eq!(phase_dist(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(
            phase_dist(&ps(&[0.9], &[1.0]), &ps(&[0.1], &[0.0])).unwrap(),
            1.2,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            phase_dist(&ps(&[0.5], &[2.0]), &ps(&[0.5], &[-1.0])).unwrap(),
            3.0,
            epsilon = 1e-15
        );
        assert!(phase_dist(&ps(&[0.5], &[2.0]), &ps(&[0.5, 0.1], &[-1.0, 0.0])).is_err());
    }

    fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, d)
    }

    proptest! {
        #[test]
        fn torus_dist_is_a_metric(a in coords(3), b in coords(3), c in coords(3)) {
            let (a, b, c) = (tp(&a), tp(&b), tp(&c));
            let ab = torus_dist(&a, &b).unwrap();
            let ba = torus_dist(&b, &a).unwrap();
            let bc = torus_dist(&b, &c).unwrap();
            let ac = torus_dist(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!(ab <= 3f64.sqrt() / 2.0 + 1e-12);
        }

        #[test]
        fn torus_dist_ignores_integer_shifts(a in coords(2), b in coords(2), s in prop::collection::vec(-3i32..3, 2)) {
            let shifted: Vec<f64> = a.iter().zip(&s).map(|(v, k)| v + *k as f64).collect();
            let d0 = torus_dist(&tp(&a), &tp(&b)).unwrap();
            let d1 = torus_dist(&tp(&shifted), &tp(&b)).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }

        #[test]
        fn phase_dist_dominates_position_dist(x in coords(2), y in coords(2), z in coords(2), w in coords(2)) {
            let p = ps(&x, &y);
            let q = ps(&z, &w);
            prop_assert!(phase_dist(&p, &q).unwrap() >= torus_dist(&p.position, &q.position).unwrap());
        }
    }
}
