//! Seeded random worlds: the planar protocol (centers in [−r0/2, r0/2]²,
//! largest semiaxis in [r0/10, r0/5], eigenvalues {1, μ} with μ in
//! [1, r0/2], rotation in [−π/2, π/2], Q = diag(1, λ) with λ in [0, r0]),
//! its n-dimensional generalization and sphere worlds.

use nalgebra::QR;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::check_condition;
use crate::error::{NavError, Result};
use crate::geometry::{obstacle_distance, Ellipsoid, QuadraticPotential, SpdMatrix, Workspace, World, SEPARATION_TOL};
use crate::rng::{rng_from, split};
use crate::{Matrix, Vector};

/// Margin that makes "strictly inside" numeric for targets and starts.
pub const INTERIOR_MARGIN: f64 = 1e-6;

const START_STREAM: u64 = 0x5354_4152_54;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub r0: f64,
    pub m: usize,
    pub dimension: usize,
    pub seed: u64,
    pub max_redraws: usize,
}

impl GenConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            r0: 20.0,
            m,
            dimension: 2,
            seed,
            max_redraws: 10_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(NavError::InvalidConfig("r0 must be positive".into()));
        }
        if self.dimension < 2 {
            return Err(NavError::InvalidConfig("dimension must be at least 2".into()));
        }
        Ok(())
    }
}

fn strictly_free(w: &World, x: &Vector) -> bool {
    w.workspace.beta0_unchecked(x) > INTERIOR_MARGIN
        && w.obstacles.iter().all(|o| o.beta_unchecked(x) > INTERIOR_MARGIN)
}

/// Accepts `candidate` if it is inside the workspace and disjoint from every
/// obstacle already placed.
fn fits(ws: &Workspace, placed: &[Ellipsoid], candidate: &Ellipsoid) -> bool {
    ws.contains_strictly(candidate)
        && placed.iter().all(|o| obstacle_distance(o, candidate) > SEPARATION_TOL)
}

fn uniform_box(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-half..half))
}

fn place_obstacles<F>(cfg: &GenConfig, ws: &Workspace, rng: &mut ChaCha8Rng, mut draw: F) -> Result<Vec<Ellipsoid>>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<Ellipsoid>,
{
    let mut obstacles = Vec::with_capacity(cfg.m);
    let mut redraws = 0;
    while obstacles.len() < cfg.m {
        let e = draw(rng)?;
        if fits(ws, &obstacles, &e) {
            obstacles.push(e);
        } else {
            redraws += 1;
            if redraws > cfg.max_redraws {
                return Err(NavError::Generation(format!(
                    "could not place obstacle {} of {} after {} redraws",
                    obstacles.len() + 1,
                    cfg.m,
                    cfg.max_redraws
                )));
            }
        }
    }
    Ok(obstacles)
}

fn place_target<F>(
    cfg: &GenConfig,
    ws: Workspace,
    obstacles: Vec<Ellipsoid>,
    q: SpdMatrix,
    rng: &mut ChaCha8Rng,
    mut draw: F,
) -> Result<World>
where
    F: FnMut(&mut ChaCha8Rng) -> Vector,
{
    let n = cfg.dimension;
    // a provisional target lets the world be built once and then moved
    let mut w = World::new(ws, obstacles, QuadraticPotential::new(q, Vector::zeros(n))?)?;
    for _ in 0..=cfg.max_redraws {
        let t = draw(rng);
        if strictly_free(&w, &t) {
            w.potential.target = t;
            return Ok(w);
        }
    }
    Err(NavError::Generation(format!("no feasible target after {} redraws", cfg.max_redraws)))
}

fn rotation_2d(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Planar world following the random protocol. Each obstacle draws, in
/// order, center x, center y, semiaxis r, ratio μ and angle θ; an obstacle
/// that intersects an earlier one or leaves the workspace is redrawn alone.
/// Then λ and the target are drawn, the target redrawn until it is strictly
/// free.
pub fn gen_world_2d(cfg: &GenConfig) -> Result<World> {
    cfg.validate()?;
    if cfg.dimension != 2 {
        return Err(NavError::InvalidConfig("gen_world_2d needs dimension 2".into()));
    }
    let r0 = cfg.r0;
    let mut rng = rng_from(cfg.seed);
    let ws = Workspace::ball(2, r0)?;
    let obstacles = place_obstacles(cfg, &ws, &mut rng, |rng| {
        let c = uniform_box(rng, 2, r0 / 2.0);
        let r = rng.random_range(r0 / 10.0..r0 / 5.0);
        let mu = rng.random_range(1.0..r0 / 2.0);
        let theta = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        Ellipsoid::new(SpdMatrix::from_eigen(&rotation_2d(theta), &[1.0, mu])?, c, r)
    })?;
    let lambda = loop {
        let l = rng.random_range(0.0..r0);
        if l > 0.0 {
            break l;
        }
    };
    let q = SpdMatrix::diagonal(&[1.0, lambda])?;
    place_target(cfg, ws, obstacles, q, &mut rng, |rng| uniform_box(rng, 2, r0 / 2.0))
}

/// Sphere world: A_i = I, Q = I, with the planar center, radius and target
/// ranges in any dimension.
pub fn gen_sphere_world(cfg: &GenConfig) -> Result<World> {
    cfg.validate()?;
    let (r0, n) = (cfg.r0, cfg.dimension);
    let mut rng = rng_from(cfg.seed);
    let ws = Workspace::ball(n, r0)?;
    let obstacles = place_obstacles(cfg, &ws, &mut rng, |rng| {
        let c = uniform_box(rng, n, r0 / 2.0);
        let r = rng.random_range(r0 / 10.0..r0 / 5.0);
        Ellipsoid::sphere(c, r)
    })?;
    place_target(cfg, ws, obstacles, SpdMatrix::identity(n), &mut rng, |rng| {
        uniform_box(rng, n, r0 / 2.0)
    })
}

/// Uniform start in [−r0, r0]ⁿ, redrawn until strictly in free space. Uses
/// a stream derived from the config seed, independent of world generation.
pub fn gen_start(w: &World, cfg: &GenConfig) -> Result<Vector> {
    let mut rng = rng_from(split(cfg.seed, START_STREAM));
    gen_start_with(w, cfg.r0, cfg.max_redraws, &mut rng)
}

pub fn gen_start_with(w: &World, r0: f64, max_redraws: usize, rng: &mut ChaCha8Rng) -> Result<Vector> {
    for _ in 0..=max_redraws {
        let x = uniform_box(rng, w.dim(), r0);
        if strictly_free(w, &x) {
            return Ok(x);
        }
    }
    Err(NavError::Generation(format!("no feasible start after {max_redraws} redraws")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenSampling {
    Uniform,
    LogUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadiusSpec {
    /// Uniform in [lo, hi).
    Uniform(f64, f64),
    /// Uniform choice among the listed values.
    Choices(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    /// Q = I with the target drawn like the planar protocol.
    Identity,
    /// Q = diag(1, λ_2, …, λ_n), λ_j uniform in (0, r0].
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdOptions {
    /// Range of μ_max/μ_min; the smallest eigenvalue is 1.
    pub ratio_range: (f64, f64),
    pub eigen_sampling: EigenSampling,
    pub radius: RadiusSpec,
    pub potential: PotentialSpec,
    /// Redraw whole worlds until the eccentricity condition fails somewhere.
    pub require_condition_failure: bool,
}

impl NdOptions {
    /// Regime of the three-dimensional example: ratios in [5, 10], radii 1
    /// or 2, and worlds that violate the eccentricity condition.
    pub fn flat_3d() -> Self {
        Self {
            ratio_range: (5.0, 10.0),
            eigen_sampling: EigenSampling::LogUniform,
            radius: RadiusSpec::Choices(vec![1.0, 2.0]),
            potential: PotentialSpec::Identity,
            require_condition_failure: true,
        }
    }

    /// Ranges matching the planar protocol for radius r0.
    pub fn planar_like(r0: f64) -> Self {
        Self {
            ratio_range: (1.0, r0 / 2.0),
            eigen_sampling: EigenSampling::Uniform,
            radius: RadiusSpec::Uniform(r0 / 10.0, r0 / 5.0),
            potential: PotentialSpec::Random,
            require_condition_failure: false,
        }
    }
}

/// Random orthogonal matrix from the QR factorization of a standard normal
/// matrix, with R's diagonal made positive so the distribution is Haar.
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = QR::new(g);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn sample_ratio(rng: &mut ChaCha8Rng, lo: f64, hi: f64, how: EigenSampling) -> f64 {
    if hi <= lo {
        return lo;
    }
    match how {
        EigenSampling::Uniform => rng.random_range(lo..hi),
        EigenSampling::LogUniform => rng.random_range(lo.ln()..hi.ln()).exp(),
    }
}

/// n-dimensional generalization: random rotation, eigenvalues 1 and
/// ρ = μ_max/μ_min from `ratio_range` with the rest between them, radius
/// per `radius`.
pub fn gen_world_nd(cfg: &GenConfig, opts: &NdOptions) -> Result<World> {
    cfg.validate()?;
    let (lo, hi) = opts.ratio_range;
    if !(lo >= 1.0 && hi >= lo) {
        return Err(NavError::InvalidConfig("ratio range must satisfy 1 <= lo <= hi".into()));
    }
    match &opts.radius {
        RadiusSpec::Uniform(a, b) if !(*a > 0.0 && b >= a) => {
            return Err(NavError::InvalidConfig("radius range must be positive and ordered".into()))
        }
        RadiusSpec::Choices(c) if c.is_empty() || c.iter().any(|r| !(*r > 0.0)) => {
            return Err(NavError::InvalidConfig("radius choices must be positive".into()))
        }
        _ => {}
    }
    let (r0, n) = (cfg.r0, cfg.dimension);
    let mut rng = rng_from(cfg.seed);
    for _ in 0..=cfg.max_redraws {
        let ws = Workspace::ball(n, r0)?;
        let obstacles = place_obstacles(cfg, &ws, &mut rng, |rng| {
            let c = uniform_box(rng, n, r0 / 2.0);
            let r = match &opts.radius {
                RadiusSpec::Uniform(a, b) if b > a => rng.random_range(*a..*b),
                RadiusSpec::Uniform(a, _) => *a,
                RadiusSpec::Choices(c) => c[rng.random_range(0..c.len())],
            };
            let rho = sample_ratio(rng, lo, hi, opts.eigen_sampling);
            let mut eigs = vec![1.0; n];
            eigs[n - 1] = rho;
            for e in eigs.iter_mut().take(n - 1).skip(1) {
                *e = sample_ratio(rng, 1.0, rho, opts.eigen_sampling);
            }
            let rot = random_rotation(rng, n);
            Ellipsoid::new(SpdMatrix::from_eigen(&rot, &eigs)?, c, r)
        })?;
        let q = match opts.potential {
            PotentialSpec::Identity => SpdMatrix::identity(n),
            PotentialSpec::Random => {
                let mut d = vec![1.0; n];
                for v in d.iter_mut().skip(1) {
                    *v = r0 - rng.random_range(0.0..r0);
                }
                SpdMatrix::diagonal(&d)?
            }
        };
        let w = place_target(cfg, ws, obstacles, q, &mut rng, |rng| uniform_box(rng, n, r0 / 2.0))?;
        if !opts.require_condition_failure || !check_condition(&w).overall {
            return Ok(w);
        }
    }
    Err(NavError::Generation("no world violating the condition was found".into()))
}
