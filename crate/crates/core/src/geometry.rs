//! World model: the quadratic task potential, the ellipsoidal obstacles, the
//! spherical (or ellipsoidal) workspace shell and the barrier products built
//! from them.

use std::fmt;

use nalgebra::{Cholesky, SymmetricEigen};

use crate::analysis::separation::{convex_distance, ConvexSet};
use crate::error::{check_dim, NavError, Result};
use crate::{Matrix, Vector};

/// Relative symmetry tolerance accepted for SPD inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Minimal convex distance for two obstacles to count as disjoint.
pub const SEPARATION_TOL: f64 = 1e-9;

/// Symmetric positive definite matrix with cached extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: Matrix,
    eig_min: f64,
    eig_max: f64,
}

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(NavError::NotSpd(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(NavError::NotSpd("non-finite entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(NavError::NotSpd(format!(
                "asymmetry {asym:e} exceeds relative tolerance"
            )));
        }
        let eig = SymmetricEigen::new(m.clone());
        let eig_min = eig.eigenvalues.min();
        let eig_max = eig.eigenvalues.max();
        if eig_min <= 0.0 {
            return Err(NavError::NotSpd(format!(
                "smallest eigenvalue {eig_min:e} is not positive"
            )));
        }
        Ok(Self { m, eig_min, eig_max })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: Matrix::identity(n, n),
            eig_min: 1.0,
            eig_max: 1.0,
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    /// `R diag(eigs) Rᵀ` for an orthogonal `rotation`.
    pub fn from_eigen(rotation: &Matrix, eigs: &[f64]) -> Result<Self> {
        let d = Matrix::from_diagonal(&Vector::from_column_slice(eigs));
        let mut m = rotation * d * rotation.transpose();
        // Exact symmetry for round-tripping.
        let t = m.transpose();
        m = (&m + t) * 0.5;
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig_min
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig_max
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.m.clone())
    }

    /// vᵀ M v
    pub fn quad_form(&self, v: &Vector) -> f64 {
        v.dot(&(&self.m * v))
    }

    pub fn mul(&self, v: &Vector) -> Vector {
        &self.m * v
    }

    /// M⁻¹ v via Cholesky.
    pub fn solve(&self, v: &Vector) -> Result<Vector> {
        let chol = Cholesky::new(self.m.clone())
            .ok_or_else(|| NavError::Singular("Cholesky factorization failed".into()))?;
        Ok(chol.solve(v))
    }

    /// Spectral norm (largest eigenvalue).
    pub fn norm(&self) -> f64 {
        self.eig_max
    }
}

/// Task potential f0(x) = (x − x*)ᵀ Q (x − x*), deliberately without a ½.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPotential {
    pub q: SpdMatrix,
    pub target: Vector,
}

impl QuadraticPotential {
    pub fn new(q: SpdMatrix, target: Vector) -> Result<Self> {
        check_dim(q.dim(), target.len())?;
        Ok(Self { q, target })
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &Vector) -> f64 {
        self.q.quad_form(&(x - &self.target))
    }

    /// ∇f0 = 2Q(x − x*)
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.q.mul(&(x - &self.target)) * 2.0)
    }

    /// ∇²f0 = 2Q
    pub fn hessian(&self) -> Matrix {
        self.q.matrix() * 2.0
    }

    pub fn lambda_min(&self) -> f64 {
        self.q.min_eigenvalue()
    }

    pub fn lambda_max(&self) -> f64 {
        self.q.max_eigenvalue()
    }
}

/// Obstacle {x : ½(x − c)ᵀA(x − c) ≤ ½r²}.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub a: SpdMatrix,
    pub center: Vector,
    pub radius: f64,
}

impl Ellipsoid {
    pub fn new(a: SpdMatrix, center: Vector, radius: f64) -> Result<Self> {
        check_dim(a.dim(), center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(NavError::InvalidWorld(format!(
                "obstacle radius must be positive, got {radius}"
            )));
        }
        Ok(Self { a, center, radius })
    }

    /// Sphere of the given radius (A = I).
    pub fn sphere(center: Vector, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::new(SpdMatrix::identity(n), center, radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn beta(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.beta_unchecked(x))
    }

    pub(crate) fn beta_unchecked(&self, x: &Vector) -> f64 {
        0.5 * self.a.quad_form(&(x - &self.center)) - 0.5 * self.radius * self.radius
    }

    /// ∇β_i = A_i (x − x_i)
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.a.mul(&(x - &self.center)))
    }

    /// ∇²β_i = A_i
    pub fn hessian(&self) -> &SpdMatrix {
        &self.a
    }

    pub fn mu_min(&self) -> f64 {
        self.a.min_eigenvalue()
    }

    pub fn mu_max(&self) -> f64 {
        self.a.max_eigenvalue()
    }

    /// Support point argmax_{y ∈ O} ⟨d, y⟩.
    pub fn support(&self, d: &Vector) -> Vector {
        // y = c + r A⁻¹d / sqrt(dᵀA⁻¹d)
        let ainv_d = self.a.solve(d).expect("SPD matrix is invertible");
        let s = d.dot(&ainv_d);
        if s <= 0.0 {
            return self.center.clone();
        }
        &self.center + ainv_d * (self.radius / s.sqrt())
    }

    /// Semi-axis lengths of the zero level set, r/√μ_k, paired with their
    /// unit directions.
    pub fn semi_axes(&self) -> Vec<(f64, Vector)> {
        let eig = self.a.eigen();
        (0..self.dim())
            .map(|k| {
                (
                    self.radius / eig.eigenvalues[k].sqrt(),
                    eig.eigenvectors.column(k).into_owned(),
                )
            })
            .collect()
    }
}

/// Workspace {x : β_0(x) ≥ 0} with β_0(x) = ½(r0² − (x − c)ᵀA0(x − c)).
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub a0: SpdMatrix,
    pub center: Vector,
    pub r0: f64,
}

impl Workspace {
    pub fn new(a0: SpdMatrix, center: Vector, r0: f64) -> Result<Self> {
        check_dim(a0.dim(), center.len())?;
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(NavError::InvalidWorld(format!(
                "workspace radius must be positive, got {r0}"
            )));
        }
        Ok(Self { a0, center, r0 })
    }

    /// Ball of radius `r0` centered at the origin.
    pub fn ball(dim: usize, r0: f64) -> Result<Self> {
        Self::new(SpdMatrix::identity(dim), Vector::zeros(dim), r0)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn beta0(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.beta0_unchecked(x))
    }

    pub(crate) fn beta0_unchecked(&self, x: &Vector) -> f64 {
        0.5 * (self.r0 * self.r0 - self.a0.quad_form(&(x - &self.center)))
    }

    /// ∇β_0 = −A0 (x − c)
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(-self.a0.mul(&(x - &self.center)))
    }

    /// Diameter of the workspace along its longest axis.
    pub fn diameter(&self) -> f64 {
        2.0 * self.r0 / self.a0.min_eigenvalue().sqrt()
    }

    /// Largest value of (x − c)ᵀA0(x − c) over the obstacle.
    ///
    /// With x = x_i + L z, L = r A_i^{-1/2}, ‖z‖ ≤ 1, this is the maximum of
    /// zᵀHz + 2gᵀz + const over the unit ball, evaluated through the dual
    /// min_{σ ≥ λmax(H)} σ + gᵀ(σI − H)⁻¹g.
    pub fn max_level_over(&self, e: &Ellipsoid) -> f64 {
        let eig_a = e.a.eigen();
        let inv_sqrt = Matrix::from_diagonal(&eig_a.eigenvalues.map(|v| 1.0 / v.sqrt()));
        let l = &eig_a.eigenvectors * inv_sqrt * eig_a.eigenvectors.transpose() * e.radius;
        let d = &e.center - &self.center;
        let a0 = self.a0.matrix();
        let h = &l * a0 * &l;
        let h = (&h + h.transpose()) * 0.5;
        let g = &l * (a0 * &d);
        let constant = d.dot(&(a0 * &d));
        let eig = SymmetricEigen::new(h);
        let gp = eig.eigenvectors.transpose() * g;
        let lam = eig.eigenvalues;
        let lmax = lam.max();
        let gnorm = gp.norm();
        let dual = |s: f64| -> f64 {
            s + lam
                .iter()
                .zip(gp.iter())
                .map(|(l, g)| if *g == 0.0 { 0.0 } else { g * g / (s - l) })
                .sum::<f64>()
        };
        let deriv = |s: f64| -> f64 {
            1.0 - lam
                .iter()
                .zip(gp.iter())
                .map(|(l, g)| if *g == 0.0 { 0.0 } else { g * g / ((s - l) * (s - l)) })
                .sum::<f64>()
        };
        let (mut lo, mut hi) = (lmax, lmax + gnorm);
        if gnorm == 0.0 {
            return lmax + constant;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if deriv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        dual(hi) + constant
    }

    /// True when the obstacle lies in the open interior of the workspace.
    pub fn contains_strictly(&self, e: &Ellipsoid) -> bool {
        self.max_level_over(e) < self.r0 * self.r0
    }
}

/// A complete navigation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub workspace: Workspace,
    pub obstacles: Vec<Ellipsoid>,
    pub potential: QuadraticPotential,
}

/// A violated world assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Target not strictly inside the workspace (Assumption 1).
    TargetOutsideWorkspace,
    /// Target inside or on an obstacle (Assumption 1).
    TargetInObstacle { index: usize },
    /// Two obstacles intersect or touch (Assumption 2).
    ObstaclesIntersect { first: usize, second: usize, distance: f64 },
    /// Obstacle not strictly inside the workspace.
    ObstacleOutsideWorkspace { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TargetOutsideWorkspace => {
                write!(f, "Assumption 1: target is not inside the workspace")
            }
            Violation::TargetInObstacle { index } => {
                write!(f, "Assumption 1: target lies in obstacle {index}")
            }
            Violation::ObstaclesIntersect {
                first,
                second,
                distance,
            } => write!(
                f,
                "Assumption 2: obstacles ({first},{second}) intersect (distance {distance:e})"
            ),
            Violation::ObstacleOutsideWorkspace { index } => {
                write!(f, "Workspace: obstacle {index} is not inside the workspace")
            }
        }
    }
}

impl World {
    /// Assemble a world, checking only that all dimensions agree.
    pub fn new(
        workspace: Workspace,
        obstacles: Vec<Ellipsoid>,
        potential: QuadraticPotential,
    ) -> Result<Self> {
        let n = workspace.dim();
        check_dim(n, potential.dim())?;
        for o in &obstacles {
            check_dim(n, o.dim())?;
        }
        if n < 2 {
            return Err(NavError::InvalidWorld(format!(
                "dimension must be at least 2, got {n}"
            )));
        }
        Ok(Self {
            workspace,
            obstacles,
            potential,
        })
    }

    pub fn dim(&self) -> usize {
        self.workspace.dim()
    }

    pub fn num_obstacles(&self) -> usize {
        self.obstacles.len()
    }

    pub fn target(&self) -> &Vector {
        &self.potential.target
    }

    pub fn f0(&self, x: &Vector) -> Result<f64> {
        self.potential.value(x)
    }

    pub fn beta0(&self, x: &Vector) -> Result<f64> {
        self.workspace.beta0(x)
    }

    /// β(x) = ∏ β_i(x); 1 for an empty world.
    pub fn beta(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.obstacles.iter().map(|o| o.beta_unchecked(x)).product())
    }

    /// β̄_i(x) = ∏_{j≠i} β_j(x).
    pub fn bar_beta(&self, x: &Vector, i: usize) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        self.check_index(i)?;
        Ok(self
            .obstacles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| o.beta_unchecked(x))
            .product())
    }

    /// ∇β(x) = Σ β̄_i(x) ∇β_i(x).
    pub fn grad_beta(&self, x: &Vector) -> Result<Vector> {
        Ok(PointEval::new(self, x)?.grad_beta())
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.obstacles.len() {
            Ok(())
        } else {
            Err(NavError::IndexOutOfRange {
                index: i,
                count: self.obstacles.len(),
            })
        }
    }

    /// Open free space membership, in conjunctive form.
    pub fn in_free_space(&self, x: &Vector) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let b0 = self.workspace.beta0_unchecked(x);
        if b0 <= 0.0 {
            return false;
        }
        let mut prod = b0;
        for o in &self.obstacles {
            let b = o.beta_unchecked(x);
            if b <= 0.0 {
                return false;
            }
            prod *= b;
        }
        prod > 0.0
    }

    /// Smallest barrier value min(β_0, β_1, …, β_m) at `x`.
    pub fn min_barrier(&self, x: &Vector) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.beta_unchecked(x))
            .fold(self.workspace.beta0_unchecked(x), f64::min)
    }

    /// Every violated world assumption; empty iff the world is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let target = self.target();
        if self.workspace.beta0_unchecked(target) <= 0.0 {
            out.push(Violation::TargetOutsideWorkspace);
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.beta_unchecked(target) <= 0.0 {
                out.push(Violation::TargetInObstacle { index: i });
            }
        }
        for (i, a) in self.obstacles.iter().enumerate() {
            for (j, b) in self.obstacles.iter().enumerate().skip(i + 1) {
                let distance = obstacle_distance(a, b);
                if distance <= SEPARATION_TOL {
                    out.push(Violation::ObstaclesIntersect {
                        first: i,
                        second: j,
                        distance,
                    });
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !self.workspace.contains_strictly(o) {
                out.push(Violation::ObstacleOutsideWorkspace { index: i });
            }
        }
        out
    }
}

/// Convex distance between two obstacles; 0 when the solver fails to
/// converge, which the caller treats as intersecting.
pub fn obstacle_distance(a: &Ellipsoid, b: &Ellipsoid) -> f64 {
    convex_distance(&ConvexSet::Ellipsoid(a), &ConvexSet::Ellipsoid(b))
        .map(|r| r.distance)
        .unwrap_or(0.0)
}

/// Quantities shared by every field evaluated at one point.
#[derive(Debug, Clone)]
pub struct PointEval<'w> {
    pub world: &'w World,
    pub x: Vector,
    /// x − x*
    pub to_target: Vector,
    pub f0: f64,
    pub beta0: f64,
    pub betas: Vec<f64>,
    /// x − x_i for each obstacle
    pub from_centers: Vec<Vector>,
    pub bar_betas: Vec<f64>,
    /// ∏ β_i in index order
    pub beta: f64,
}

impl<'w> PointEval<'w> {
    pub fn new(world: &'w World, x: &Vector) -> Result<Self> {
        check_dim(world.dim(), x.len())?;
        let to_target = x - world.target();
        let f0 = world.potential.q.quad_form(&to_target);
        let beta0 = world.workspace.beta0_unchecked(x);
        let m = world.obstacles.len();
        let mut betas = Vec::with_capacity(m);
        let mut from_centers = Vec::with_capacity(m);
        for o in &world.obstacles {
            let d = x - &o.center;
            betas.push(0.5 * o.a.quad_form(&d) - 0.5 * o.radius * o.radius);
            from_centers.push(d);
        }
        // prefix/suffix products give every omitted product in O(m)
        let mut prefix = vec![1.0; m + 1];
        for i in 0..m {
            prefix[i + 1] = prefix[i] * betas[i];
        }
        let mut suffix = vec![1.0; m + 1];
        for i in (0..m).rev() {
            suffix[i] = suffix[i + 1] * betas[i];
        }
        let bar_betas = (0..m).map(|i| prefix[i] * suffix[i + 1]).collect();
        Ok(Self {
            world,
            x: x.clone(),
            to_target,
            f0,
            beta0,
            betas,
            from_centers,
            bar_betas,
            beta: prefix[m],
        })
    }

    pub fn grad_f0(&self) -> Vector {
        self.world.potential.q.mul(&self.to_target) * 2.0
    }

    pub fn grad_beta0(&self) -> Vector {
        -self.world.workspace.a0.mul(&(&self.x - &self.world.workspace.center))
    }

    pub fn grad_beta_i(&self, i: usize) -> Vector {
        self.world.obstacles[i].a.mul(&self.from_centers[i])
    }

    pub fn grad_beta(&self) -> Vector {
        let mut g = Vector::zeros(self.x.len());
        for i in 0..self.betas.len() {
            g += self.grad_beta_i(i) * self.bar_betas[i];
        }
        g
    }

    /// Product β_0 ∏_{i∈indices} β_i and its gradient, accumulated in the
    /// order given.
    pub fn barrier_with<I>(&self, indices: I) -> (f64, Vector)
    where
        I: IntoIterator<Item = usize> + Clone,
    {
        let mut value = self.beta0;
        for i in indices.clone() {
            value *= self.betas[i];
        }
        // ∇(β_0 ∏β_i) = (∏β_i)∇β_0 + β_0 Σ_i (∏_{j≠i} β_j) ∇β_i
        let idx: Vec<usize> = indices.into_iter().collect();
        let n = idx.len();
        let mut prefix = vec![1.0; n + 1];
        for (p, &i) in idx.iter().enumerate() {
            prefix[p + 1] = prefix[p] * self.betas[i];
        }
        let mut suffix = vec![1.0; n + 1];
        for p in (0..n).rev() {
            suffix[p] = suffix[p + 1] * self.betas[idx[p]];
        }
        let mut grad = self.grad_beta0() * prefix[n];
        for (p, &i) in idx.iter().enumerate() {
            grad += self.grad_beta_i(i) * (self.beta0 * prefix[p] * suffix[p + 1]);
        }
        (value, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn two_circle_world() -> World {
        World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![
                Ellipsoid::sphere(v(&[3.0, 0.0]), 1.0).unwrap(),
                Ellipsoid::sphere(v(&[-3.0, 0.0]), 1.0).unwrap(),
            ],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[0.0, 5.0])).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn f0_values() {
        let p = QuadraticPotential::new(SpdMatrix::identity(2), v(&[0.0, 0.0])).unwrap();
        assert_eq!(p.value(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(p.value(&v(&[3.0, 4.0])).unwrap(), 25.0);
        let p = QuadraticPotential::new(SpdMatrix::diagonal(&[1.0, 4.0]).unwrap(), v(&[1.0, 0.0]))
            .unwrap();
        assert_eq!(p.value(&v(&[2.0, 1.0])).unwrap(), 5.0);
        assert!(matches!(
            p.value(&v(&[1.0, 2.0, 3.0])),
            Err(NavError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn beta_i_values() {
        let e = Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(e.beta(&v(&[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(e.beta(&v(&[0.0, 0.0])).unwrap(), -0.5);
        let e = Ellipsoid::new(SpdMatrix::diagonal(&[4.0, 1.0]).unwrap(), v(&[0.0, 0.0]), 2.0)
            .unwrap();
        assert_eq!(e.beta(&v(&[1.0, 1.0])).unwrap(), 0.5);
        assert!(e.beta(&v(&[1.0])).is_err());
    }

    #[test]
    fn beta_i_gradients() {
        let e = Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(e.gradient(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        let e = Ellipsoid::new(SpdMatrix::diagonal(&[2.0, 3.0]).unwrap(), v(&[1.0, 1.0]), 1.0)
            .unwrap();
        assert_eq!(e.gradient(&v(&[2.0, 2.0])).unwrap(), v(&[2.0, 3.0]));
    }

    #[test]
    fn spd_rejects_bad_input() {
        assert!(SpdMatrix::new(Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(SpdMatrix::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(SpdMatrix::new(Matrix::from_row_slice(2, 3, &[1.0; 6])).is_err());
        let m = SpdMatrix::new(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((m.min_eigenvalue() - 1.0).abs() < 1e-12);
        assert!((m.max_eigenvalue() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn product_barrier() {
        let w = two_circle_world();
        assert_eq!(w.beta(&v(&[0.0, 0.0])).unwrap(), 16.0);
        let empty = World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[0.0, 0.0])).unwrap(),
        )
        .unwrap();
        assert_eq!(empty.beta(&v(&[7.0, -1.0])).unwrap(), 1.0);
        // boundary of obstacle 0
        assert_eq!(w.beta(&v(&[4.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn omitted_product() {
        let w = two_circle_world();
        let x = v(&[4.0, 0.0]);
        let b1 = w.obstacles[1].beta(&x).unwrap();
        assert_eq!(w.bar_beta(&x, 0).unwrap(), b1);
        assert!(matches!(
            w.bar_beta(&x, 2),
            Err(NavError::IndexOutOfRange { index: 2, count: 2 })
        ));
        let single = World::new(
            w.workspace.clone(),
            vec![w.obstacles[0].clone()],
            w.potential.clone(),
        )
        .unwrap();
        assert_eq!(single.bar_beta(&v(&[1.0, 1.0]), 0).unwrap(), 1.0);
    }

    #[test]
    fn free_space_membership() {
        let w = two_circle_world();
        assert!(!w.in_free_space(&v(&[3.0, 0.0])));
        assert!(w.in_free_space(w.target()));
        assert!(!w.in_free_space(&v(&[20.5, 0.0])));
        assert!(!w.in_free_space(&v(&[4.0, 0.0])));
    }

    #[test]
    fn free_space_false_on_obstacle_boundaries() {
        let e = Ellipsoid::new(
            SpdMatrix::new(Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap(),
            v(&[1.0, -2.0]),
            1.5,
        )
        .unwrap();
        let w = World::new(
            Workspace::ball(2, 20.0).unwrap(),
            vec![e.clone()],
            QuadraticPotential::new(SpdMatrix::identity(2), v(&[8.0, 8.0])).unwrap(),
        )
        .unwrap();
        for k in 0..720 {
            let th = k as f64 * std::f64::consts::PI / 360.0;
            let d = v(&[th.cos(), th.sin()]);
            // β_i(c + t d) = 0 ⇔ t = r / sqrt(dᵀAd)
            let t = e.radius / e.a.quad_form(&d).sqrt();
            let x = &e.center + d * t;
            let b = e.beta(&x).unwrap();
            // snap onto the closed obstacle in case rounding landed just outside
            let x = if b > 0.0 { &e.center + (&x - &e.center) * (1.0 - 1e-15) } else { x };
            assert!(!w.in_free_space(&x), "boundary point {x} reported free");
        }
    }

    #[test]
    fn validation_examples() {
        let pot = |t: &[f64]| QuadraticPotential::new(SpdMatrix::identity(2), v(t)).unwrap();
        let ws = Workspace::ball(2, 20.0).unwrap();
        let ok = World::new(
            ws.clone(),
            vec![
                Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap(),
                Ellipsoid::sphere(v(&[3.0, 0.0]), 1.0).unwrap(),
            ],
            pot(&[0.0, 5.0]),
        )
        .unwrap();
        assert!(ok.validate().is_empty());

        let bad_target = World::new(ws.clone(), ok.obstacles.clone(), pot(&[3.0, 0.0])).unwrap();
        assert_eq!(bad_target.validate(), vec![Violation::TargetInObstacle { index: 1 }]);

        let overlap = World::new(
            ws.clone(),
            vec![
                Ellipsoid::sphere(v(&[0.0, 0.0]), 1.0).unwrap(),
                Ellipsoid::sphere(v(&[1.5, 0.0]), 1.0).unwrap(),
            ],
            pot(&[0.0, 5.0]),
        )
        .unwrap();
        let viol = overlap.validate();
        assert_eq!(viol.len(), 1);
        assert!(matches!(
            viol[0],
            Violation::ObstaclesIntersect { first: 0, second: 1, .. }
        ));
        assert!(viol[0].to_string().starts_with("Assumption 2"));

        let outside = World::new(
            ws,
            vec![Ellipsoid::sphere(v(&[19.5, 0.0]), 1.0).unwrap()],
            pot(&[0.0, 5.0]),
        )
        .unwrap();
        assert_eq!(
            outside.validate(),
            vec![Violation::ObstacleOutsideWorkspace { index: 0 }]
        );
    }

    #[test]
    fn max_level_matches_sampling() {
        let ws = Workspace::new(
            SpdMatrix::diagonal(&[1.0, 2.0]).unwrap(),
            v(&[0.5, -0.5]),
            20.0,
        )
        .unwrap();
        let e = Ellipsoid::new(
            SpdMatrix::new(Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap(),
            v(&[4.0, 2.0]),
            2.0,
        )
        .unwrap();
        let mut best = f64::MIN;
        for k in 0..100_000 {
            let th = k as f64 * 2.0 * std::f64::consts::PI / 100_000.0;
            let d = v(&[th.cos(), th.sin()]);
            let t = e.radius / e.a.quad_form(&d).sqrt();
            let x = &e.center + d * t;
            best = best.max(ws.a0.quad_form(&(x - &ws.center)));
        }
        let exact = ws.max_level_over(&e);
        assert!(exact >= best - 1e-9);
        assert!((exact - best).abs() < 1e-6 * exact, "{exact} vs {best}");
    }

    fn arb_ellipsoid() -> impl Strategy<Value = Ellipsoid> {
        (
            0.0..std::f64::consts::PI,
            1.0..10.0f64,
            -5.0..5.0f64,
            -5.0..5.0f64,
            0.5..3.0f64,
        )
            .prop_map(|(th, mu, cx, cy, r)| {
                let (s, c) = th.sin_cos();
                let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
                Ellipsoid::new(SpdMatrix::from_eigen(&rot, &[1.0, mu]).unwrap(), v(&[cx, cy]), r)
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn hessian_inverse_gradient_is_relative_position(
            e in arb_ellipsoid(), x in -10.0..10.0f64, y in -10.0..10.0f64
        ) {
            let p = v(&[x, y]);
            let g = e.gradient(&p).unwrap();
            let r = e.hessian().solve(&g).unwrap();
            let expect = &p - &e.center;
            prop_assert!((r - &expect).norm() <= 1e-10 * expect.norm().max(1e-300));
        }

        #[test]
        fn potential_newton_step_is_relative_position(
            l in 0.1..20.0f64, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
            x in -10.0..10.0f64, y in -10.0..10.0f64
        ) {
            let p = QuadraticPotential::new(SpdMatrix::diagonal(&[1.0, l]).unwrap(), v(&[tx, ty])).unwrap();
            let pt = v(&[x, y]);
            let g = p.gradient(&pt).unwrap();
            let h = SpdMatrix::new(p.hessian()).unwrap();
            let r = h.solve(&g).unwrap();
            let expect = &pt - &p.target;
            prop_assert!((r - &expect).norm() <= 1e-10 * expect.norm().max(1e-300));
        }

        #[test]
        fn omitted_product_identity(
            a in arb_ellipsoid(), b in arb_ellipsoid(), c in arb_ellipsoid(),
            x in -10.0..10.0f64, y in -10.0..10.0f64
        ) {
            let w = World::new(
                Workspace::ball(2, 20.0).unwrap(),
                vec![a, b, c],
                QuadraticPotential::new(SpdMatrix::identity(2), v(&[0.0, 0.0])).unwrap(),
            ).unwrap();
            let p = v(&[x, y]);
            let beta = w.beta(&p).unwrap();
            let pe = PointEval::new(&w, &p).unwrap();
            for i in 0..3 {
                let prod = w.obstacles[i].beta(&p).unwrap() * w.bar_beta(&p, i).unwrap();
                prop_assert!((prod - beta).abs() <= 1e-12 * beta.abs().max(1e-300));
                prop_assert!((pe.bar_betas[i] - w.bar_beta(&p, i).unwrap()).abs()
                    <= 1e-12 * pe.bar_betas[i].abs().max(1e-300));
            }
        }

        #[test]
        fn beta_i_gradient_matches_central_differences(
            e in arb_ellipsoid(), x in -10.0..10.0f64, y in -10.0..10.0f64
        ) {
            let h = 1e-6;
            let p = v(&[x, y]);
            let g = e.gradient(&p).unwrap();
            for k in 0..2 {
                let mut xp = p.clone();
                let mut xm = p.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (e.beta(&xp).unwrap() - e.beta(&xm).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-5);
            }
        }
    }
}
