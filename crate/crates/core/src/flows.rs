//! Navigation vector fields and the Rimon-Koditschek potential
//! φ_k = f0 / (f0^k + β_0β)^{1/k}.

use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::geometry::{PointEval, World};
use crate::{Matrix, Vector};

/// The three first-order fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    /// g_nav = −β∇f0 + (f0/k)∇β
    NavFn,
    /// g_old = −β(x − x*) + (f0/k) B(x)⁻¹∇β
    SecondOrder,
    /// g_new = −β(x − x*) + (f0/k) Σ β̄_i (x − x_i)
    CurvatureCorrected,
}

impl FlowKind {
    pub const ALL: [FlowKind; 3] = [FlowKind::NavFn, FlowKind::SecondOrder, FlowKind::CurvatureCorrected];

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            FlowKind::NavFn => "nav",
            FlowKind::SecondOrder => "old",
            FlowKind::CurvatureCorrected => "new",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        match s {
            "nav" => Some(FlowKind::NavFn),
            "old" => Some(FlowKind::SecondOrder),
            "new" => Some(FlowKind::CurvatureCorrected),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub k: f64,
    /// Scale τ of the soft switch exp(−max(β_i, 0)/τ).
    pub switch_temperature: f64,
    /// Multiple of the identity added to B(x).
    pub ridge: f64,
}

impl FlowParams {
    pub fn new(k: f64) -> Self {
        Self {
            k,
            switch_temperature: 0.5,
            ridge: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(NavError::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        if !(self.switch_temperature > 0.0) {
            return Err(NavError::InvalidConfig("switch temperature must be positive".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(NavError::InvalidConfig("ridge must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A field split as g = attractive + repulsive.
#[derive(Debug, Clone)]
pub struct FieldTerms {
    pub attractive: Vector,
    pub repulsive: Vector,
}

impl FieldTerms {
    pub fn total(&self) -> Vector {
        &self.attractive + &self.repulsive
    }

    /// ‖attr + rep‖ / (‖attr‖ + ‖rep‖); 1 when both terms vanish.
    pub fn cancellation(&self) -> f64 {
        let denom = self.attractive.norm() + self.repulsive.norm();
        if denom == 0.0 || !denom.is_finite() {
            return 1.0;
        }
        self.total().norm() / denom
    }
}

/// Value and gradient of f0 / (f0^k + P)^{1/k} for a barrier product P.
#[derive(Debug, Clone)]
pub struct NavPotential {
    pub value: f64,
    /// ∇φ, possibly underflowing to zero far from the target for large k.
    pub gradient: Vector,
    /// −(P∇f0 − f0∇P/k) split into attraction and repulsion: a positive
    /// multiple of −∇φ that stays representable.
    pub descent: FieldTerms,
}

/// ln(f0^k + P) with the usual max shift.
fn log_denominator(f0: f64, p: f64, k: f64) -> f64 {
    if f0 <= 0.0 {
        return p.ln();
    }
    let a = k * f0.ln();
    let b = p.ln();
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Shared routine for the full and the partial navigation potential.
pub(crate) fn nav_potential(
    f0: f64,
    grad_f0: &Vector,
    p: f64,
    grad_p: &Vector,
    k: f64,
) -> Result<NavPotential> {
    if !(p >= 0.0) {
        return Err(NavError::OutsideFreeSpace);
    }
    let descent = FieldTerms {
        attractive: grad_f0 * (-p),
        repulsive: grad_p * (f0 / k),
    };
    if p == 0.0 {
        // boundary: φ = 1 by continuity, gradient along the barrier normal
        let u = -descent.total();
        let scale = if f0 > 0.0 { 1.0 / (k * f0.powf(k)) } else { 0.0 };
        let gradient = if scale.is_finite() { u * scale } else { Vector::zeros(grad_f0.len()) };
        return Ok(NavPotential {
            value: if f0 > 0.0 { 1.0 } else { 0.0 },
            gradient,
            descent,
        });
    }
    let log_d = log_denominator(f0, p, k);
    let value = if f0 > 0.0 {
        // the exact value is below 1; rounding may not be
        (f0.ln() - log_d / k).exp().min(1.0)
    } else {
        0.0
    };
    let u = -descent.total();
    let un = u.norm();
    let gradient = if un > 0.0 {
        let log_mag = un.ln() - (1.0 + 1.0 / k) * log_d;
        u * (log_mag.exp() / un)
    } else {
        u
    };
    Ok(NavPotential {
        value,
        gradient,
        descent,
    })
}

fn full_barrier(pe: &PointEval<'_>) -> (f64, Vector) {
    pe.barrier_with(0..pe.betas.len())
}

fn check_closed_free(pe: &PointEval<'_>) -> Result<()> {
    if pe.beta0 < 0.0 || pe.betas.iter().any(|&b| b < 0.0) {
        return Err(NavError::OutsideFreeSpace);
    }
    Ok(())
}

fn check_open_free(pe: &PointEval<'_>) -> Result<()> {
    if pe.beta0 <= 0.0 || pe.betas.iter().any(|&b| b <= 0.0) {
        return Err(NavError::OutsideFreeSpace);
    }
    Ok(())
}

/// The full navigation potential and its scale-free descent direction.
pub fn nav_potential_at(w: &World, k: f64, x: &Vector) -> Result<NavPotential> {
    let pe = PointEval::new(w, x)?;
    check_closed_free(&pe)?;
    let (p, gp) = full_barrier(&pe);
    nav_potential(pe.f0, &pe.grad_f0(), p, &gp, k)
}

/// φ_k(x); 1 on the boundary of free space.
pub fn phi_k(w: &World, k: f64, x: &Vector) -> Result<f64> {
    Ok(nav_potential_at(w, k, x)?.value)
}

/// ∇φ_k(x) = (f0^k + β_0β)^{−1−1/k} (β_0β∇f0 − f0∇(β_0β)/k).
pub fn grad_phi_k(w: &World, k: f64, x: &Vector) -> Result<Vector> {
    let pe = PointEval::new(w, x)?;
    check_open_free(&pe)?;
    let (p, gp) = full_barrier(&pe);
    Ok(nav_potential(pe.f0, &pe.grad_f0(), p, &gp, k)?.gradient)
}

pub fn g_nav_terms(w: &World, k: f64, x: &Vector) -> Result<FieldTerms> {
    let pe = PointEval::new(w, x)?;
    Ok(FieldTerms {
        attractive: pe.grad_f0() * (-pe.beta),
        repulsive: pe.grad_beta() * (pe.f0 / k),
    })
}

pub fn g_nav(w: &World, k: f64, x: &Vector) -> Result<Vector> {
    Ok(g_nav_terms(w, k, x)?.total())
}

/// Normalized soft-switch weights α_i / Σ_j α_j with
/// α_i = exp(−max(β_i, 0)/τ).
pub fn soft_switch(w: &World, params: &FlowParams, x: &Vector) -> Result<Vec<f64>> {
    let pe = PointEval::new(w, x)?;
    Ok(switch_weights(&pe.betas, params.switch_temperature))
}

fn switch_weights(betas: &[f64], tau: f64) -> Vec<f64> {
    if betas.is_empty() {
        return Vec::new();
    }
    let expo: Vec<f64> = betas.iter().map(|b| -b.max(0.0) / tau).collect();
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = expo.iter().map(|e| (e - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// B(x) = Σ α_i ∇²β_i + ridge·I
pub fn curvature_blend(w: &World, params: &FlowParams, x: &Vector) -> Result<Matrix> {
    let pe = PointEval::new(w, x)?;
    Ok(blend_from(&pe, params))
}

fn blend_from(pe: &PointEval<'_>, params: &FlowParams) -> Matrix {
    let n = pe.x.len();
    let weights = switch_weights(&pe.betas, params.switch_temperature);
    let mut b = Matrix::identity(n, n) * params.ridge;
    for (o, a) in pe.world.obstacles.iter().zip(weights) {
        b += o.a.matrix() * a;
    }
    b
}

pub fn g_old_terms(w: &World, params: &FlowParams, x: &Vector) -> Result<FieldTerms> {
    let pe = PointEval::new(w, x)?;
    let attractive = &pe.to_target * (-pe.beta);
    if pe.betas.is_empty() {
        return Ok(FieldTerms {
            repulsive: Vector::zeros(attractive.len()),
            attractive,
        });
    }
    let b = blend_from(&pe, params);
    let chol = nalgebra::Cholesky::new(b)
        .ok_or_else(|| NavError::Singular("curvature blend B(x) is not positive definite".into()))?;
    let corrected = chol.solve(&pe.grad_beta());
    Ok(FieldTerms {
        attractive,
        repulsive: corrected * (pe.f0 / params.k),
    })
}

pub fn g_old(w: &World, params: &FlowParams, x: &Vector) -> Result<Vector> {
    Ok(g_old_terms(w, params, x)?.total())
}

pub fn g_new_terms(w: &World, k: f64, x: &Vector) -> Result<FieldTerms> {
    let pe = PointEval::new(w, x)?;
    let mut rep = Vector::zeros(pe.x.len());
    for (d, bb) in pe.from_centers.iter().zip(&pe.bar_betas) {
        rep += d * *bb;
    }
    Ok(FieldTerms {
        attractive: &pe.to_target * (-pe.beta),
        repulsive: rep * (pe.f0 / k),
    })
}

pub fn g_new(w: &World, k: f64, x: &Vector) -> Result<Vector> {
    Ok(g_new_terms(w, k, x)?.total())
}

pub fn flow_terms(kind: FlowKind, w: &World, params: &FlowParams, x: &Vector) -> Result<FieldTerms> {
    match kind {
        FlowKind::NavFn => g_nav_terms(w, params.k, x),
        FlowKind::SecondOrder => g_old_terms(w, params, x),
        FlowKind::CurvatureCorrected => g_new_terms(w, params.k, x),
    }
}

pub fn eval_flow(kind: FlowKind, w: &World, params: &FlowParams, x: &Vector) -> Result<Vector> {
    Ok(flow_terms(kind, w, params, x)?.total())
}
