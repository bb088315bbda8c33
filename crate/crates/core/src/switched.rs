//! Partial-knowledge navigation: the agent only accounts for obstacles whose
//! c-neighborhood {β_i ≤ c} it has visited.

use std::collections::BTreeSet;

use crate::error::{NavError, Result};
use crate::flows::{nav_potential, NavPotential};
use crate::geometry::{PointEval, World};
use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct AwarenessState {
    discovered: BTreeSet<usize>,
    sensor_range: f64,
    /// (step, obstacle index) in discovery order.
    discovery_log: Vec<(usize, usize)>,
}

impl AwarenessState {
    pub fn new(sensor_range: f64) -> Result<Self> {
        if !(sensor_range > 0.0) {
            return Err(NavError::InvalidConfig(format!(
                "sensor range must be positive, got {sensor_range}"
            )));
        }
        Ok(Self {
            discovered: BTreeSet::new(),
            sensor_range,
            discovery_log: Vec::new(),
        })
    }

    /// Awareness with every obstacle of `w` already discovered at step 0.
    pub fn full(w: &World, sensor_range: f64) -> Result<Self> {
        let mut s = Self::new(sensor_range)?;
        for i in 0..w.num_obstacles() {
            s.discovered.insert(i);
            s.discovery_log.push((0, i));
        }
        Ok(s)
    }

    pub fn discovered(&self) -> &BTreeSet<usize> {
        &self.discovered
    }

    pub fn sensor_range(&self) -> f64 {
        self.sensor_range
    }

    pub fn discovery_log(&self) -> &[(usize, usize)] {
        &self.discovery_log
    }

    pub fn contains(&self, i: usize) -> bool {
        self.discovered.contains(&i)
    }

    /// Adds every obstacle with β_i(x) ≤ c; returns how many were new.
    pub fn observe(&mut self, w: &World, x: &Vector, step: usize) -> Result<usize> {
        crate::error::check_dim(w.dim(), x.len())?;
        let mut added = 0;
        for (i, o) in w.obstacles.iter().enumerate() {
            if !self.discovered.contains(&i) && o.beta(x)? <= self.sensor_range {
                self.discovered.insert(i);
                self.discovery_log.push((step, i));
                added += 1;
            }
        }
        Ok(added)
    }
}

pub fn update_awareness(s: &AwarenessState, w: &World, x: &Vector, step: usize) -> Result<AwarenessState> {
    let mut next = s.clone();
    next.observe(w, x, step)?;
    Ok(next)
}

fn partial_barrier(pe: &PointEval<'_>, s: &AwarenessState) -> (f64, Vector) {
    pe.barrier_with(s.discovered.iter().copied())
}

/// β_0(x) ∏_{i discovered} β_i(x)
pub fn partial_beta(w: &World, s: &AwarenessState, x: &Vector) -> Result<f64> {
    let pe = PointEval::new(w, x)?;
    Ok(partial_barrier(&pe, s).0)
}

/// x ∈ ℱ_𝒜: β_0 > 0 and β_i > 0 for every discovered i.
pub fn in_partial_free_space(w: &World, s: &AwarenessState, x: &Vector) -> bool {
    if x.len() != w.dim() || w.workspace.beta0_unchecked(x) <= 0.0 {
        return false;
    }
    s.discovered.iter().all(|&i| w.obstacles[i].beta_unchecked(x) > 0.0)
}

/// Partial potential with value, exact gradient and scale-free descent
/// direction. Errors outside the closed partial free space.
pub fn partial_potential(w: &World, s: &AwarenessState, k: f64, x: &Vector) -> Result<NavPotential> {
    let pe = PointEval::new(w, x)?;
    if pe.beta0 < 0.0 || s.discovered.iter().any(|&i| pe.betas[i] < 0.0) {
        return Err(NavError::OutsideFreeSpace);
    }
    let (p, gp) = partial_barrier(&pe, s);
    nav_potential(pe.f0, &pe.grad_f0(), p, &gp, k)
}

/// φ_{k,𝒜}(x) = f0 / (f0^k + β_0 ∏_{i∈𝒜} β_i)^{1/k}
pub fn partial_phi_k(w: &World, s: &AwarenessState, k: f64, x: &Vector) -> Result<f64> {
    Ok(partial_potential(w, s, k, x)?.value)
}

pub fn partial_grad(w: &World, s: &AwarenessState, k: f64, x: &Vector) -> Result<Vector> {
    if !in_partial_free_space(w, s, x) {
        return Err(NavError::OutsideFreeSpace);
    }
    Ok(partial_potential(w, s, k, x)?.gradient)
}

/// −∇φ_{k,𝒜} with the awareness held at entry, and the awareness updated
/// at x afterwards (left limit at discovery instants).
pub fn switched_step_field(
    w: &World,
    s: &AwarenessState,
    k: f64,
    x: &Vector,
    step: usize,
) -> Result<(Vector, AwarenessState)> {
    let field = -partial_grad(w, s, k, x)?;
    Ok((field, update_awareness(s, w, x, step)?))
}

/// Torque τ = −∇φ_{k,𝒜}(x) − c_d v for a unit-mass double integrator.
pub fn torque_controller(
    w: &World,
    s: &AwarenessState,
    k: f64,
    x: &Vector,
    v: &Vector,
    damping_gain: f64,
) -> Result<Vector> {
    if !(damping_gain > 0.0) {
        return Err(NavError::InvalidConfig("damping gain must be positive".into()));
    }
    crate::error::check_dim(w.dim(), v.len())?;
    Ok(-partial_grad(w, s, k, x)? - v * damping_gain)
}

/// Largest step for which no c-neighborhood can be crossed in one step:
/// η ≤ c / (2 max_i‖A_i‖ · diameter).
pub fn max_safe_step(w: &World, sensor_range: f64) -> f64 {
    let a_max = w.obstacles.iter().map(|o| o.a.norm()).fold(0.0, f64::max);
    if a_max == 0.0 {
        return f64::INFINITY;
    }
    sensor_range / (2.0 * a_max * w.workspace.diameter())
}
