//! Global and local Lyapunov candidates, the violation set 𝒱_k(δ) and the
//! obstacle repulsion zones ℬ_k^i.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::separation::{convex_distance, ConvexSet};
use crate::error::{NavError, Result};
use crate::flows::{flow_terms, g_new_terms, FlowKind, FlowParams};
use crate::geometry::{PointEval, World};
use crate::Vector;

/// Default radius δ of the target ball, on the scale of the squared step.
pub const DEFAULT_DELTA: f64 = 1e-4;

/// V(x) = ½‖x − x*‖²
pub fn global_v(w: &World, x: &Vector) -> Result<f64> {
    crate::error::check_dim(w.dim(), x.len())?;
    Ok(0.5 * (x - w.target()).norm_squared())
}

fn vdot_parts(w: &World, params: &FlowParams, x: &Vector, kind: FlowKind) -> Result<(f64, f64)> {
    let terms = flow_terms(kind, w, params, x)?;
    let d = x - w.target();
    Ok((d.dot(&terms.attractive), d.dot(&terms.repulsive)))
}

/// V̇ = ⟨x − x*, g(x)⟩, summed as attractive plus repulsive contribution.
pub fn global_vdot(w: &World, params: &FlowParams, x: &Vector, kind: FlowKind) -> Result<f64> {
    let (a, r) = vdot_parts(w, params, x, kind)?;
    Ok(a + r)
}

fn check_target_ball(w: &World, delta: f64, x: &Vector) -> Result<f64> {
    let d2 = (x - w.target()).norm_squared();
    if d2 <= delta {
        return Err(NavError::InsideTargetBall { delta });
    }
    Ok(d2)
}

/// x ∈ 𝒱_k(δ): β(x) ≤ f0(x) Σ β̄_i ⟨x − x*, x − x_i⟩ / (k‖x − x*‖²).
///
/// Evaluated with both sides multiplied by ‖x − x*‖², using the same
/// products as [`global_vdot`] for the curvature-corrected field.
pub fn in_violation_set(w: &World, k: f64, delta: f64, x: &Vector) -> Result<bool> {
    check_target_ball(w, delta, x)?;
    let terms = g_new_terms(w, k, x)?;
    let d = x - w.target();
    let lhs = -d.dot(&terms.attractive);
    let rhs = d.dot(&terms.repulsive);
    Ok(lhs <= rhs)
}

/// V_i(x) = ½(x − x*)ᵀA_i(x − x*)
pub fn local_v_i(w: &World, x: &Vector, i: usize) -> Result<f64> {
    w.check_index(i)?;
    crate::error::check_dim(w.dim(), x.len())?;
    Ok(0.5 * w.obstacles[i].a.quad_form(&(x - w.target())))
}

/// Ṽ_i(x) = zone_max − (x − x*)ᵀA_i(x − x*)
pub fn local_vtilde_i(w: &World, x: &Vector, i: usize, zone_max: f64) -> Result<f64> {
    Ok(zone_max - 2.0 * local_v_i(w, x, i)?)
}

/// Right-hand side of the obstacle-specific repulsion-zone inequality.
pub(crate) fn zone_rhs(pe: &PointEval<'_>, k: f64, i: usize) -> Result<f64> {
    let bar = pe.bar_betas[i];
    if bar == 0.0 {
        return Err(NavError::Precondition(format!(
            "omitted product of obstacle {i} vanishes (point on another boundary)"
        )));
    }
    let a = pe.world.obstacles[i].a.matrix();
    let ad = a * &pe.to_target;
    let num: f64 = pe
        .from_centers
        .iter()
        .zip(&pe.bar_betas)
        .map(|(dl, bl)| bl * ad.dot(dl))
        .sum();
    let den = k * bar * ad.dot(&pe.to_target);
    Ok(pe.f0 * num / den)
}

/// x ∈ ℬ_k^i(δ): β_i(x) ≤ f0 Σ_l β̄_l (x − x*)ᵀA_i(x − x_l) / (k β̄_i (x − x*)ᵀA_i(x − x*)).
pub fn in_repulsion_zone(w: &World, k: f64, delta: f64, x: &Vector, i: usize) -> Result<bool> {
    w.check_index(i)?;
    check_target_ball(w, delta, x)?;
    let pe = PointEval::new(w, x)?;
    Ok(pe.betas[i] <= zone_rhs(&pe, k, i)?)
}

/// Euclidean distance from x to obstacle i (0 inside).
pub fn distance_to_obstacle(w: &World, i: usize, x: &Vector) -> Result<f64> {
    w.check_index(i)?;
    crate::error::check_dim(w.dim(), x.len())?;
    if w.obstacles[i].beta(x)? <= 0.0 {
        return Ok(0.0);
    }
    let r = convex_distance(&ConvexSet::Point(x.clone()), &ConvexSet::Ellipsoid(&w.obstacles[i]))?;
    Ok(r.distance)
}

/// Quarter of the smallest pairwise obstacle distance, so the ε-balls are
/// disjoint. With one obstacle, a quarter of its distance to the target;
/// with none, a quarter of the workspace radius.
pub fn default_epsilon(w: &World) -> Result<f64> {
    let m = w.obstacles.len();
    if m == 0 {
        return Ok(0.25 * w.workspace.r0);
    }
    if m == 1 {
        return Ok(0.25 * distance_to_obstacle(w, 0, w.target())?);
    }
    let mut best = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..m {
            let r = convex_distance(
                &ConvexSet::Ellipsoid(&w.obstacles[i]),
                &ConvexSet::Ellipsoid(&w.obstacles[j]),
            )?;
            best = best.min(r.distance);
        }
    }
    Ok(0.25 * best)
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let u = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let nu = u.norm();
        if nu > 1e-3 && nu <= 1.0 {
            return u / nu;
        }
    }
}

/// Numerical max of (x − x*)ᵀA_i(x − x*) over ℬ_k^i ∩ ℬ_ε^i.
///
/// Candidates are drawn on rays from the center, log-spaced in their offset
/// from the boundary so the thin zone is resolved, and the best one is
/// refined by a random local ascent that stays inside the zone. Returns
/// `None` when no sample lands in the zone.
pub fn zone_max(
    w: &World,
    k: f64,
    delta: f64,
    i: usize,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<(f64, Vector)>> {
    w.check_index(i)?;
    let o = &w.obstacles[i];
    let n = w.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = |x: &Vector| o.a.quad_form(&(x - w.target()));
    let admissible = |x: &Vector| -> bool {
        if !w.in_free_space(x) || (x - w.target()).norm_squared() <= delta {
            return false;
        }
        match in_repulsion_zone(w, k, delta, x, i) {
            Ok(z) => z && distance_to_obstacle(w, i, x).map(|d| d < eps).unwrap_or(false),
            Err(_) => false,
        }
    };
    let mut best: Option<(f64, Vector)> = None;
    let (lo, hi) = ((1e-12f64).ln(), eps.ln());
    for _ in 0..samples {
        let u = random_direction(&mut rng, n);
        let tb = o.radius / o.a.quad_form(&u).sqrt();
        let offset = rng.random_range(lo..hi).exp();
        let x = &o.center + &u * (tb + offset);
        if !admissible(&x) {
            continue;
        }
        let val = objective(&x);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, x));
        }
    }
    let Some((mut val, mut x)) = best else {
        return Ok(None);
    };
    let mut step = 0.1 * eps;
    while step > 1e-12 {
        let mut improved = false;
        for _ in 0..4 * n {
            let cand = &x + random_direction(&mut rng, n) * step;
            if admissible(&cand) {
                let cv = objective(&cand);
                if cv > val {
                    val = cv;
                    x = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Some((val, x)))
}
