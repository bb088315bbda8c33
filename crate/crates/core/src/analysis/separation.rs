//! Distance and separating hyperplanes between convex sets given by support
//! functions, via a Gilbert-Johnson-Keerthi iteration on the Minkowski
//! difference with an exact dimension-generic simplex sub-solver.

use nalgebra::Cholesky;

use crate::error::{NavError, Result};
use crate::geometry::Ellipsoid;
use crate::{Matrix, Vector};

const MAX_ITERATIONS: usize = 10_000;
/// Absolute accuracy target on the distance.
const DISTANCE_TOL: f64 = 1e-10;

/// Convex sets supported by the solver.
#[derive(Debug, Clone)]
pub enum ConvexSet<'a> {
    Ellipsoid(&'a Ellipsoid),
    /// conv(E ∪ {p})
    Hull(&'a Ellipsoid, Vector),
    Point(Vector),
}

impl ConvexSet<'_> {
    pub fn support(&self, d: &Vector) -> Vector {
        match self {
            ConvexSet::Ellipsoid(e) => e.support(d),
            ConvexSet::Hull(e, p) => {
                let s = e.support(d);
                if p.dot(d) > s.dot(d) {
                    p.clone()
                } else {
                    s
                }
            }
            ConvexSet::Point(p) => p.clone(),
        }
    }

    /// h(d) = max_{y} ⟨d, y⟩
    pub fn support_value(&self, d: &Vector) -> f64 {
        self.support(d).dot(d)
    }

    fn interior_point(&self) -> Vector {
        match self {
            ConvexSet::Ellipsoid(e) | ConvexSet::Hull(e, _) => e.center.clone(),
            ConvexSet::Point(p) => p.clone(),
        }
    }
}

/// Hyperplane {y : ⟨normal, y⟩ = offset} with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vector,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !offset.is_finite() {
            return Err(NavError::Precondition("degenerate hyperplane normal".into()));
        }
        Ok(Self {
            normal: normal / n,
            offset: offset / n,
        })
    }

    /// ⟨normal, y⟩ − offset
    pub fn signed_distance(&self, y: &Vector) -> f64 {
        self.normal.dot(y) - self.offset
    }

    pub fn project(&self, y: &Vector) -> Vector {
        y - &self.normal * self.signed_distance(y)
    }
}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    pub distance: f64,
    /// Closest point on the first set.
    pub witness_a: Vector,
    /// Closest point on the second set.
    pub witness_b: Vector,
    /// Perpendicular bisector of the witness pair, normal pointing from the
    /// first set to the second. `None` when the sets intersect.
    pub hyperplane: Option<Hyperplane>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Vertex {
    w: Vector,
    a: Vector,
    b: Vector,
}

/// Minimum-norm point of conv(points) as barycentric weights over a subset.
///
/// Enumerates all non-empty subsets, solves the affine min-norm problem on
/// each and keeps the best one lying inside the hull; exact for the handful
/// of points GJK keeps (at most n + 1).
fn min_norm_in_hull(points: &[Vector]) -> (Vector, Vec<(usize, f64)>) {
    let k = points.len();
    let mut best: Option<(f64, Vector, Vec<(usize, f64)>)> = None;
    for mask in 1u32..(1u32 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let Some(weights) = affine_min_norm(points, &idx) else {
            continue;
        };
        if weights.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let mut v = Vector::zeros(points[0].len());
        for (&i, &l) in idx.iter().zip(&weights) {
            v += &points[i] * l;
        }
        let n2 = v.norm_squared();
        if best.as_ref().is_none_or(|(b, _, _)| n2 < *b) {
            let bary = idx
                .iter()
                .zip(&weights)
                .filter(|(_, &l)| l > 0.0)
                .map(|(&i, &l)| (i, l))
                .collect();
            best = Some((n2, v, bary));
        }
    }
    let (_, v, bary) = best.expect("single vertices are always feasible");
    (v, bary)
}

fn affine_min_norm(points: &[Vector], idx: &[usize]) -> Option<Vec<f64>> {
    if idx.len() == 1 {
        return Some(vec![1.0]);
    }
    let p0 = &points[idx[0]];
    let edges: Vec<Vector> = idx[1..].iter().map(|&i| &points[i] - p0).collect();
    let r = edges.len();
    let gram = Matrix::from_fn(r, r, |i, j| edges[i].dot(&edges[j]));
    let rhs = Vector::from_fn(r, |i, _| -edges[i].dot(p0));
    let scale = gram.diagonal().max();
    if !(scale > 0.0) {
        return None;
    }
    let chol = Cholesky::new(gram.clone())?;
    // reject nearly dependent subsets
    let diag_min = chol.l().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if diag_min * diag_min < 1e-14 * scale {
        return None;
    }
    let mu = chol.solve(&rhs);
    let mut weights = Vec::with_capacity(r + 1);
    weights.push(1.0 - mu.sum());
    weights.extend(mu.iter().copied());
    Some(weights)
}

/// Euclidean distance between two convex sets with witness points and a
/// separating hyperplane.
pub fn convex_distance(set_a: &ConvexSet<'_>, set_b: &ConvexSet<'_>) -> Result<SeparationResult> {
    let a0 = set_a.interior_point();
    let b0 = set_b.interior_point();
    let n = a0.len();
    let scale = 1.0 + a0.amax().max(b0.amax());

    let mut d = &a0 - &b0;
    if d.norm() == 0.0 {
        d = Vector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    }
    let sa = set_a.support(&(-&d));
    let sb = set_b.support(&d);
    let mut simplex = vec![Vertex {
        w: &sa - &sb,
        a: sa,
        b: sb,
    }];
    let mut v = simplex[0].w.clone();
    let mut bary: Vec<(usize, f64)> = vec![(0, 1.0)];

    for it in 0..MAX_ITERATIONS {
        let vnorm = v.norm();
        if vnorm <= 1e-14 * scale {
            return Ok(intersecting(&simplex, &bary, it));
        }
        // support of A − B in direction −v
        let sa = set_a.support(&(-&v));
        let sb = set_b.support(&v);
        let w = &sa - &sb;
        let gap = v.norm_squared() - v.dot(&w);
        if gap <= DISTANCE_TOL * vnorm || gap <= 4.0 * f64::EPSILON * scale * vnorm {
            return Ok(finish(&simplex, &bary, v, it));
        }
        simplex.push(Vertex { w, a: sa, b: sb });
        let pts: Vec<Vector> = simplex.iter().map(|s| s.w.clone()).collect();
        let (nv, nb) = min_norm_in_hull(&pts);
        if nv.norm() >= vnorm * (1.0 - 1e-15) {
            // no progress is possible at this precision
            simplex.pop();
            return Ok(finish(&simplex, &bary, v, it));
        }
        simplex = nb.iter().map(|&(i, _)| simplex[i].clone()).collect();
        bary = nb.iter().enumerate().map(|(k, &(_, l))| (k, l)).collect();
        v = nv;
        if simplex.len() > n {
            // origin enclosed by a full-dimensional simplex
            return Ok(intersecting(&simplex, &bary, it));
        }
    }
    Err(NavError::NoConvergence(format!(
        "convex distance did not converge within {MAX_ITERATIONS} iterations"
    )))
}

fn witnesses(simplex: &[Vertex], bary: &[(usize, f64)]) -> (Vector, Vector) {
    let n = simplex[0].a.len();
    let mut p = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    for &(i, l) in bary {
        p += &simplex[i].a * l;
        q += &simplex[i].b * l;
    }
    (p, q)
}

fn intersecting(simplex: &[Vertex], bary: &[(usize, f64)], iterations: usize) -> SeparationResult {
    let (p, q) = witnesses(simplex, bary);
    SeparationResult {
        distance: 0.0,
        witness_a: p,
        witness_b: q,
        hyperplane: None,
        iterations,
    }
}

fn finish(simplex: &[Vertex], bary: &[(usize, f64)], v: Vector, iterations: usize) -> SeparationResult {
    let (p, q) = witnesses(simplex, bary);
    let distance = v.norm();
    // v = p − q, normal points from A towards B
    let normal = -&v / distance;
    let mid = (&p + &q) * 0.5;
    let offset = normal.dot(&mid);
    SeparationResult {
        distance,
        witness_a: p,
        witness_b: q,
        hyperplane: Some(Hyperplane { normal, offset }),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpdMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn rotated(th: f64, mu: f64, c: [f64; 2], r: f64) -> Ellipsoid {
        let (s, co) = th.sin_cos();
        let rot = Matrix::from_row_slice(2, 2, &[co, -s, s, co]);
        Ellipsoid::new(SpdMatrix::from_eigen(&rot, &[1.0, mu]).unwrap(), v(&c), r).unwrap()
    }

    /// max over sampled unit directions of the support-function gap.
    fn polar_grid_distance(a: &ConvexSet, b: &ConvexSet) -> f64 {
        let mut best = f64::MIN;
        for k in 0..3600 {
            let th = (k as f64 * 0.1).to_radians();
            let u = v(&[th.cos(), th.sin()]);
            let gap = -b.support_value(&(-&u)) - a.support_value(&u);
            best = best.max(gap);
        }
        best.max(0.0)
    }

    #[test]
    fn unit_circles_four_apart() {
        let a = Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap();
        let b = Ellipsoid::sphere(v(&[4.0, 0.0]), 1.0).unwrap();
        let r = convex_distance(&ConvexSet::Ellipsoid(&a), &ConvexSet::Ellipsoid(&b)).unwrap();
        assert!((r.distance - 2.0).abs() < 1e-9);
        let h = r.hyperplane.unwrap();
        assert!((h.normal[0] - 1.0).abs() < 1e-6 && h.normal[1].abs() < 1e-6);
        assert!((h.offset - 2.0).abs() < 1e-6);
        assert!((r.witness_a - v(&[1.0, 0.0])).norm() < 1e-4);
        assert!((r.witness_b - v(&[3.0, 0.0])).norm() < 1e-4);
    }

    #[test]
    fn intersecting_sets_have_zero_distance() {
        let a = Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap();
        let b = Ellipsoid::sphere(v(&[1.5, 0.0]), 1.0).unwrap();
        let r = convex_distance(&ConvexSet::Ellipsoid(&a), &ConvexSet::Ellipsoid(&b)).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.hyperplane.is_none());
        let r = convex_distance(&ConvexSet::Ellipsoid(&a), &ConvexSet::Point(v(&[0.2, 0.1])))
            .unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn point_to_sphere() {
        let a = Ellipsoid::sphere(v(&[1.0, 1.0, 1.0]), 2.0).unwrap();
        let r = convex_distance(
            &ConvexSet::Point(v(&[1.0, 1.0, 6.0])),
            &ConvexSet::Ellipsoid(&a),
        )
        .unwrap();
        assert!((r.distance - 3.0).abs() < 1e-9);
    }

    #[test]
    fn hull_extends_towards_point() {
        let a = Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap();
        let b = Ellipsoid::sphere(v(&[0.0, 5.0]), 1.0).unwrap();
        // the hull of a with a point beyond b swallows b
        let r = convex_distance(
            &ConvexSet::Hull(&a, v(&[0.0, 10.0])),
            &ConvexSet::Ellipsoid(&b),
        )
        .unwrap();
        assert_eq!(r.distance, 0.0);
        let r = convex_distance(
            &ConvexSet::Hull(&a, v(&[-10.0, 0.0])),
            &ConvexSet::Ellipsoid(&b),
        )
        .unwrap();
        assert!((r.distance - 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_pairs_match_polar_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut separated = 0;
        for _ in 0..200 {
            let a = rotated(
                rng.random_range(-1.6..1.6),
                rng.random_range(1.0..10.0),
                [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)],
                rng.random_range(1.0..3.0),
            );
            let b = rotated(
                rng.random_range(-1.6..1.6),
                rng.random_range(1.0..10.0),
                [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)],
                rng.random_range(1.0..3.0),
            );
            let (sa, sb) = (ConvexSet::Ellipsoid(&a), ConvexSet::Ellipsoid(&b));
            let r = convex_distance(&sa, &sb).unwrap();
            let oracle = polar_grid_distance(&sa, &sb);
            assert!(
                (r.distance - oracle).abs() < 1e-4,
                "gjk {} vs oracle {}",
                r.distance,
                oracle
            );
            if r.distance > 0.0 {
                separated += 1;
                assert!((r.distance - (&r.witness_a - &r.witness_b).norm()).abs() < 1e-9);
                let h = r.hyperplane.unwrap();
                // strict separation
                assert!(sa.support_value(&h.normal) < h.offset);
                assert!(-sb.support_value(&(-&h.normal)) > h.offset);
            }
        }
        assert!(separated > 50);
    }
}
