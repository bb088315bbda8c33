//! Numerical checks of the lemma-level claims: one-way crossing of
//! obstacle-free hyperplanes, outward motion on the repulsion-zone boundary
//! and instability of the aligned boundary equilibrium.

use super::lyapunov::zone_rhs;
use super::separation::Hyperplane;
use crate::error::{NavError, Result};
use crate::flows::g_new;
use crate::geometry::{PointEval, World};
use crate::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct CrossingReport {
    /// Plane normal, oriented away from the target's side.
    pub normal: Vector,
    pub samples_used: usize,
    /// max ⟨n, g_new(x)⟩ over the projected samples.
    pub max_normal_velocity: f64,
    pub positive_samples: usize,
    /// Smallest k making every sampled ⟨n, g_new⟩ negative.
    pub k_estimate: f64,
}

/// Evaluates ⟨n, g_new⟩ at the free-space projections of `samples` onto the
/// hyperplane, with n pointing away from x*.
pub fn one_way_crossing_check(
    w: &World,
    k: f64,
    plane: &Hyperplane,
    samples: &[Vector],
) -> Result<CrossingReport> {
    crate::error::check_dim(w.dim(), plane.normal.len())?;
    let sd_target = plane.signed_distance(w.target());
    if sd_target.abs() <= 1e-12 * (1.0 + plane.offset.abs()) {
        return Err(NavError::Precondition("target lies on the hyperplane".into()));
    }
    for (i, o) in w.obstacles.iter().enumerate() {
        // half-width of the ellipsoid along the normal
        let reach = o.radius * o.a.solve(&plane.normal)?.dot(&plane.normal).sqrt();
        if plane.signed_distance(&o.center).abs() <= reach {
            return Err(NavError::Precondition(format!("hyperplane intersects obstacle {i}")));
        }
    }
    let normal = if sd_target > 0.0 { -&plane.normal } else { plane.normal.clone() };
    let mut report = CrossingReport {
        normal: normal.clone(),
        samples_used: 0,
        max_normal_velocity: f64::NEG_INFINITY,
        positive_samples: 0,
        k_estimate: 0.0,
    };
    for s in samples {
        crate::error::check_dim(w.dim(), s.len())?;
        let x = plane.project(s);
        if !w.in_free_space(&x) {
            continue;
        }
        let pe = PointEval::new(w, &x)?;
        let along = pe.beta * normal.dot(&pe.to_target);
        let push: f64 = pe
            .from_centers
            .iter()
            .zip(&pe.bar_betas)
            .map(|(d, b)| b * normal.dot(d))
            .sum::<f64>()
            * pe.f0;
        let nv = normal.dot(&g_new(w, k, &x)?);
        report.samples_used += 1;
        report.max_normal_velocity = report.max_normal_velocity.max(nv);
        if nv > 0.0 {
            report.positive_samples += 1;
        }
        if along > 0.0 {
            report.k_estimate = report.k_estimate.max(push / along);
        }
    }
    Ok(report)
}

/// Boundary of ℬ_k^i along the ray x_i + t·u, searched at most `reach` past
/// the obstacle boundary. Returns the last in-zone point found by
/// bisection, or `None` when the ray starts outside the zone or never
/// leaves it.
pub fn zone_boundary_point(
    w: &World,
    k: f64,
    delta: f64,
    i: usize,
    direction: &Vector,
    reach: f64,
) -> Result<Option<Vector>> {
    w.check_index(i)?;
    crate::error::check_dim(w.dim(), direction.len())?;
    let o = &w.obstacles[i];
    let u = direction.normalize();
    let tb = o.radius / o.a.quad_form(&u).sqrt();
    let at = |t: f64| &o.center + &u * t;
    let in_zone = |x: &Vector| -> Result<Option<bool>> {
        let pe = PointEval::new(w, x)?;
        if pe.beta0 <= 0.0
            || pe.betas.iter().enumerate().any(|(j, &b)| j != i && b <= 0.0)
            || pe.to_target.norm_squared() <= delta
        {
            return Ok(None);
        }
        Ok(Some(pe.betas[i] <= zone_rhs(&pe, k, i)?))
    };
    if in_zone(&at(tb))? != Some(true) {
        return Ok(None);
    }
    let mut lo = tb;
    let mut s = 1e-9 * tb;
    let hi = loop {
        if s > reach {
            return Ok(None);
        }
        match in_zone(&at(tb + s))? {
            Some(true) => {
                lo = tb + s;
                s *= 2.0;
            }
            Some(false) => break tb + s,
            None => return Ok(None),
        }
    };
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if in_zone(&at(mid))? == Some(true) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(at(lo)))
}

/// Unit n in the plane of (x − x*, x − x_i) with ⟨n, x − x*⟩ = 0 and
/// ⟨n, x − x_i⟩ > 0; `None` when the two vectors are aligned.
pub fn outward_normal(x: &Vector, target: &Vector, center: &Vector) -> Option<Vector> {
    let a = x - target;
    let b = x - center;
    let aa = a.norm_squared();
    if aa == 0.0 {
        return None;
    }
    let perp = &b - &a * (a.dot(&b) / aa);
    let pn = perp.norm();
    if pn <= 1e-9 * b.norm() {
        return None;
    }
    Some(perp / pn)
}

/// Doubling search from `k_start` for the first k at which the repulsion
/// zone boundary point along `direction` moves outward, ⟨n, g_new⟩ > 0.
/// Returns the threshold and the boundary point, or `None` if `k_max` is
/// passed first.
pub fn outward_motion_threshold(
    w: &World,
    i: usize,
    direction: &Vector,
    delta: f64,
    reach: f64,
    k_start: f64,
    k_max: f64,
) -> Result<Option<(f64, Vector)>> {
    if !(k_start > 0.0) {
        return Err(NavError::InvalidConfig("k_start must be positive".into()));
    }
    let mut k = k_start;
    while k <= k_max {
        if let Some(x) = zone_boundary_point(w, k, delta, i, direction, reach)? {
            if let Some(n) = outward_normal(&x, w.target(), &w.obstacles[i].center) {
                if n.dot(&g_new(w, k, &x)?) > 0.0 {
                    return Ok(Some((k, x)));
                }
            }
        }
        k *= 2.0;
    }
    Ok(None)
}

fn jacobian(w: &World, k: f64, x: &Vector) -> Result<Matrix> {
    let n = x.len();
    let mut j = Matrix::zeros(n, n);
    for c in 0..n {
        let h = 1e-6 * x[c].abs().max(1.0);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        let col = (g_new(w, k, &xp)? - g_new(w, k, &xm)?) / (2.0 * h);
        j.set_column(c, &col);
    }
    Ok(j)
}

/// Equilibrium of g_new on the ray from x* through x_i beyond the obstacle,
/// where (x_s − x*) = a(x_s − x_i) with a > 1. A scalar root of ⟨e, g_new⟩
/// is found by bracketing and bisection and then polished by Newton steps on
/// the full field. `None` if no sign change occurs inside free space.
pub fn aligned_equilibrium(w: &World, k: f64, i: usize) -> Result<Option<Vector>> {
    w.check_index(i)?;
    let o = &w.obstacles[i];
    let e = (&o.center - w.target()).normalize();
    let tb = o.radius / o.a.quad_form(&e).sqrt();
    let at = |t: f64| &o.center + &e * t;
    let h = |t: f64| -> Result<f64> { Ok(e.dot(&g_new(w, k, &at(t))?)) };
    let mut lo = tb;
    if h(lo)? <= 0.0 {
        return Ok(None);
    }
    let mut s = 1e-9 * tb;
    let mut hi;
    loop {
        hi = tb + s;
        if !w.in_free_space(&at(hi)) && hi > tb {
            let pe = PointEval::new(w, &at(hi))?;
            if pe.beta0 <= 0.0 || pe.betas.iter().enumerate().any(|(j, &b)| j != i && b <= 0.0) {
                return Ok(None);
            }
        }
        if h(hi)? < 0.0 {
            break;
        }
        lo = hi;
        s *= 2.0;
        if s > w.workspace.diameter() {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = at(0.5 * (lo + hi));
    for _ in 0..20 {
        let g = g_new(w, k, &x)?;
        if g.norm() == 0.0 {
            break;
        }
        let j = jacobian(w, k, &x)?;
        let Some(dx) = j.lu().solve(&g) else { break };
        let next = &x - dx;
        if !w.in_free_space(&next) || g_new(w, k, &next)?.norm() >= g.norm() {
            break;
        }
        x = next;
    }
    Ok(Some(x))
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub point: Vector,
    /// ‖g_new(x_s)‖
    pub residual: f64,
    /// (re, im) pairs of the finite-difference Jacobian spectrum.
    pub eigenvalues: Vec<(f64, f64)>,
    pub max_real_part: f64,
    pub unstable: bool,
}

/// Locates the aligned equilibrium and inspects the spectrum of the
/// finite-difference Jacobian of g_new there.
pub fn unstable_equilibrium_check(w: &World, k: f64, i: usize) -> Result<Option<EquilibriumReport>> {
    let Some(x) = aligned_equilibrium(w, k, i)? else {
        return Ok(None);
    };
    let j = jacobian(w, k, &x)?;
    let eigenvalues: Vec<(f64, f64)> = j.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect();
    let max_real_part = eigenvalues.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(EquilibriumReport {
        residual: g_new(w, k, &x)?.norm(),
        point: x,
        eigenvalues,
        max_real_part,
        unstable: max_real_part > 0.0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::lyapunov::{in_repulsion_zone, DEFAULT_DELTA};
    use crate::geometry::{Ellipsoid, QuadraticPotential, SpdMatrix, Workspace};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn two_far() -> World {
        World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![
                Ellipsoid::sphere(v(&[8.0, 5.0]), 1.0).unwrap(),
                Ellipsoid::sphere(v(&[8.0, -5.0]), 1.0).unwrap(),
            ],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[-10.0, 0.0])).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn crossing_negative_for_large_k() {
        let w = two_far();
        let plane = Hyperplane::new(v(&[1.0, 0.0]), 0.0).unwrap();
        let samples: Vec<Vector> = (-18..=18).map(|y| v(&[0.0, y as f64])).collect();
        let r = one_way_crossing_check(&w, 60.0, &plane, &samples).unwrap();
        assert!(r.samples_used > 30);
        assert_eq!(r.positive_samples, 0);
        assert!(r.max_normal_velocity < 0.0);
        assert!(r.k_estimate < 60.0);
        assert_eq!(r.normal, v(&[1.0, 0.0]));
    }

    #[test]
    fn crossing_positive_for_small_k_near_obstacle() {
        let w = World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![Ellipsoid::sphere(v(&[-1.2, 0.0]), 1.0).unwrap()],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[-10.0, 0.0])).unwrap(),
        )
        .unwrap();
        let plane = Hyperplane::new(v(&[1.0, 0.0]), 0.0).unwrap();
        let samples: Vec<Vector> = (-10..=10).map(|y| v(&[0.0, y as f64 * 0.1])).collect();
        let r = one_way_crossing_check(&w, 0.01, &plane, &samples).unwrap();
        assert!(r.positive_samples > 0);
        assert!(r.k_estimate > 0.01);
    }

    #[test]
    fn crossing_rejects_bad_planes() {
        let w = two_far();
        let through_target = Hyperplane::new(v(&[1.0, 0.0]), -10.0).unwrap();
        assert!(matches!(
            one_way_crossing_check(&w, 10.0, &through_target, &[]),
            Err(NavError::Precondition(_))
        ));
        let through_obstacle = Hyperplane::new(v(&[1.0, 0.0]), 8.0).unwrap();
        assert!(matches!(
            one_way_crossing_check(&w, 10.0, &through_obstacle, &[]),
            Err(NavError::Precondition(_))
        ));
    }

    #[test]
    fn zone_boundary_is_a_boundary() {
        let w = two_far();
        let u = v(&[1.0, 0.3]);
        let x = zone_boundary_point(&w, 20.0, DEFAULT_DELTA, 0, &u, 5.0).unwrap().unwrap();
        assert!(in_repulsion_zone(&w, 20.0, DEFAULT_DELTA, &x, 0).unwrap());
        let beyond = &x + u.normalize() * 1e-6;
        assert!(!in_repulsion_zone(&w, 20.0, DEFAULT_DELTA, &beyond, 0).unwrap());
        // target-side rays start outside the zone
        assert!(zone_boundary_point(&w, 20.0, DEFAULT_DELTA, 0, &v(&[-1.0, 0.0]), 2.0).unwrap().is_none());
    }

    #[test]
    fn normal_constraints() {
        let x = v(&[2.0, 1.0]);
        let t = v(&[0.0, 0.0]);
        let c = v(&[1.0, 1.5]);
        let n = outward_normal(&x, &t, &c).unwrap();
        assert!(n.dot(&(&x - &t)).abs() < 1e-12);
        assert!(n.dot(&(&x - &c)) > 0.0);
        assert!(outward_normal(&v(&[2.0, 0.0]), &t, &v(&[1.0, 0.0])).is_none());
    }

    #[test]
    fn single_obstacle_equilibrium_is_unstable() {
        let w = World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![Ellipsoid::new(SpdMatrix::diagonal(&[1.0, 3.0]).unwrap(), v(&[4.0, 2.0]), 2.0).unwrap()],
            QuadraticPotential::new(SpdMatrix::diagonal(&[1.0, 2.0]).unwrap(), v(&[-3.0, -1.0])).unwrap(),
        )
        .unwrap();
        let r = unstable_equilibrium_check(&w, 20.0, 0).unwrap().unwrap();
        assert!(r.residual < 1e-8, "{}", r.residual);
        assert!(r.unstable, "{:?}", r.eigenvalues);
        let a = &r.point - w.target();
        let b = &r.point - &w.obstacles[0].center;
        assert!((a[0] * b[1] - a[1] * b[0]).abs() < 1e-8 * a.norm() * b.norm());
        assert!(a.norm() > b.norm());
    }
}
