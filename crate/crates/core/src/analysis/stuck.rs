//! Local-minimum detection for the navigation potential.

use crate::error::Result;
use crate::flows::nav_potential_at;
use crate::geometry::World;
use crate::Vector;

pub const DEFAULT_TOL_G: f64 = 1e-6;
pub const DEFAULT_TOL_F: f64 = 1e-3;

/// Relative cancellation ‖P∇f0 − f0∇P/k‖ / (‖P∇f0‖ + ‖f0∇P/k‖) of the two
/// terms of ∇φ_k, with P = β_0β. Unlike ‖∇φ_k‖, which carries the factor
/// (f0^k + P)^{−1−1/k} and underflows for large k, this measure is
/// scale-free.
pub fn gradient_cancellation(w: &World, k: f64, x: &Vector) -> Result<f64> {
    Ok(nav_potential_at(w, k, x)?.descent.cancellation())
}

/// True at a near-critical point of φ_k that is not the target: the
/// cancellation measure is below `tol_g` while ‖∇f0‖ > `tol_f`.
pub fn stuck_detector(w: &World, k: f64, x: &Vector, tol_g: f64, tol_f: f64) -> Result<bool> {
    let grad_f0 = w.potential.gradient(x)?;
    if grad_f0.norm() <= tol_f {
        return Ok(false);
    }
    Ok(gradient_cancellation(w, k, x)? < tol_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ellipsoid, QuadraticPotential, SpdMatrix, Workspace};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn target_and_generic_points_are_not_stuck() {
        let w = World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![Ellipsoid::sphere(v(&[5.0, 0.0]), 1.0).unwrap()],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[0.0, 0.0])).unwrap(),
        )
        .unwrap();
        assert!(!stuck_detector(&w, 10.0, &v(&[0.0, 0.0]), DEFAULT_TOL_G, DEFAULT_TOL_F).unwrap());
        assert!(!stuck_detector(&w, 10.0, &v(&[-3.0, 7.0]), DEFAULT_TOL_G, DEFAULT_TOL_F).unwrap());
    }
}
