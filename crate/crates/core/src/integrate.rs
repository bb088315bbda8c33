//! Normalized fixed-step integration x ← x + η g/(‖g‖ + ε) with success,
//! collision, timeout and local-minimum termination.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::flows::{flow_terms, nav_potential_at, phi_k, FieldTerms, FlowKind, FlowParams};
use crate::switched::{max_safe_step, partial_grad, partial_potential, AwarenessState};
use crate::geometry::World;
use crate::Vector;

/// Which field drives the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Controller {
    Flow(FlowKind),
    /// −∇φ_{k,𝒜} over the obstacles discovered within sensor range c.
    Switched { sensor_range: f64 },
    /// −∇φ_k with full knowledge of the world.
    Potential,
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Flow(kind) => kind.short_name(),
            Controller::Switched { .. } => "switched",
            Controller::Potential => "potential",
        }
    }
}

/// Local-minimum detection while ‖∇f0‖ > `tol_f`: either the active field's
/// attractive and repulsive parts cancel to relative level `tol_g` for
/// `patience` consecutive steps, or the last `patience` steps jitter in
/// place, with net displacement below `tol_g` times their path length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StuckConfig {
    pub tol_g: f64,
    pub tol_f: f64,
    pub patience: usize,
}

impl Default for StuckConfig {
    fn default() -> Self {
        Self {
            tol_g: 1e-2,
            tol_f: 1e-3,
            patience: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub controller: Controller,
    pub params: FlowParams,
    pub eta: f64,
    pub epsilon_norm: f64,
    pub max_steps: usize,
    pub stuck: Option<StuckConfig>,
    pub seed: u64,
    pub record_diagnostics: bool,
}

impl SimConfig {
    pub fn new(controller: Controller, k: f64) -> Self {
        Self {
            controller,
            params: FlowParams::new(k),
            eta: 0.01,
            epsilon_norm: 1e-4,
            max_steps: 50_000,
            stuck: Some(StuckConfig::default()),
            seed: 0,
            record_diagnostics: false,
        }
    }

    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(NavError::InvalidConfig(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.epsilon_norm > 0.0) {
            return Err(NavError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_steps < 1 {
            return Err(NavError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if let Controller::Switched { sensor_range } = self.controller {
            if !(sensor_range > 0.0) {
                return Err(NavError::InvalidConfig("sensor range must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Collision,
    Timeout,
    LocalMinimum,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "success",
            Status::Collision => "collision",
            Status::Timeout => "timeout",
            Status::LocalMinimum => "local_minimum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// ½‖x − x*‖²
    pub v: f64,
    /// φ_k(x) of the full world.
    pub phi: f64,
    /// Norm of the field that produced the step.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Accepted states, followed by the rejected state on collision.
    pub states: Vec<Vector>,
    /// Velocities of a second-order run, aligned with `states`.
    pub velocities: Option<Vec<Vector>>,
    pub status: Status,
    /// Number of accepted steps.
    pub steps: usize,
    /// Minimum of β_0 and all β_i over accepted states.
    pub min_beta_seen: f64,
    /// One entry per state in `states`.
    pub diagnostics: Option<Vec<StepDiagnostics>>,
    /// (step, obstacle) discovery events of a switched run.
    pub discovery_log: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory is never empty")
    }

    /// States that were accepted by the integrator.
    pub fn accepted_states(&self) -> &[Vector] {
        let n = if self.status == Status::Collision {
            self.states.len() - 1
        } else {
            self.states.len()
        };
        &self.states[..n]
    }
}

/// Field of the controller at x and its attractive/repulsive split. The
/// potential-based controllers use the positive multiple
/// −(P∇f0 − f0∇P/k) of −∇φ, which has the same direction but does not
/// underflow; the normalized step only sees the direction.
fn field(w: &World, cfg: &SimConfig, aware: Option<&AwarenessState>, x: &Vector) -> Result<FieldTerms> {
    match cfg.controller {
        Controller::Flow(kind) => flow_terms(kind, w, &cfg.params, x),
        Controller::Potential => Ok(nav_potential_at(w, cfg.k(), x)?.descent),
        Controller::Switched { .. } => {
            let s = aware.ok_or_else(|| NavError::InvalidConfig("switched controller needs awareness".into()))?;
            Ok(partial_potential(w, s, cfg.k(), x)?.descent)
        }
    }
}

/// Lengths of the most recent steps, for the jitter test.
#[derive(Default)]
struct StallWindow {
    lengths: std::collections::VecDeque<f64>,
    total: f64,
}

impl StallWindow {
    fn push(&mut self, len: f64, cap: usize) {
        self.lengths.push_back(len);
        self.total += len;
        while self.lengths.len() > cap {
            self.total -= self.lengths.pop_front().unwrap_or(0.0);
        }
    }

    fn stalled(&self, states: &[Vector], sc: StuckConfig) -> bool {
        let n = self.lengths.len();
        if sc.patience == 0 || n < sc.patience || states.len() <= n {
            return false;
        }
        let net = (&states[states.len() - 1] - &states[states.len() - 1 - n]).norm();
        net < sc.tol_g * self.total
    }
}

fn normalized_step(x: &Vector, g: &Vector, eta: f64, eps: f64) -> Vector {
    x + g * (eta / (g.norm() + eps))
}

/// One normalized step. A switched controller uses the obstacles within
/// sensor range of x.
pub fn step(w: &World, cfg: &SimConfig, x: &Vector) -> Result<Vector> {
    cfg.validate()?;
    crate::error::check_dim(w.dim(), x.len())?;
    let aware = match cfg.controller {
        Controller::Switched { sensor_range } => {
            let mut s = AwarenessState::new(sensor_range)?;
            s.observe(w, x, 0)?;
            Some(s)
        }
        _ => None,
    };
    let g = field(w, cfg, aware.as_ref(), x)?.total();
    Ok(normalized_step(x, &g, cfg.eta, cfg.epsilon_norm))
}

fn diagnostics(w: &World, k: f64, x: &Vector, grad_norm: f64) -> StepDiagnostics {
    StepDiagnostics {
        v: 0.5 * (x - w.target()).norm_squared(),
        phi: phi_k(w, k, x).unwrap_or(f64::NAN),
        grad_norm,
    }
}

fn setup(w: &World, cfg: &SimConfig, x0: &Vector) -> Result<Option<AwarenessState>> {
    cfg.validate()?;
    crate::error::check_dim(w.dim(), x0.len())?;
    if !w.in_free_space(x0) {
        return Err(NavError::OutsideFreeSpace);
    }
    match cfg.controller {
        Controller::Switched { sensor_range } => {
            let limit = max_safe_step(w, sensor_range);
            if cfg.eta > limit {
                return Err(NavError::InvalidConfig(format!(
                    "step {} exceeds the sensor-range guard {limit:.3e}",
                    cfg.eta
                )));
            }
            let mut s = AwarenessState::new(sensor_range)?;
            s.observe(w, x0, 0)?;
            Ok(Some(s))
        }
        _ => Ok(None),
    }
}

/// Integrates from x0 until success, collision, detected local minimum or
/// `max_steps`.
pub fn run(w: &World, cfg: &SimConfig, x0: &Vector) -> Result<Trajectory> {
    let mut aware = setup(w, cfg, x0)?;
    let mut x = x0.clone();
    let mut states = vec![x.clone()];
    let mut diag = cfg.record_diagnostics.then(Vec::new);
    let mut min_beta = w.min_barrier(&x);
    let mut stuck_count = 0usize;
    let mut window = StallWindow::default();
    let mut status = Status::Timeout;

    for t in 0..=cfg.max_steps {
        let terms = if (&x - w.target()).norm() < cfg.eta {
            status = Status::Success;
            None
        } else {
            Some(field(w, cfg, aware.as_ref(), &x)?)
        };
        let g = terms.as_ref().map(FieldTerms::total);
        if let Some(d) = diag.as_mut() {
            d.push(diagnostics(w, cfg.k(), &x, g.as_ref().map_or(0.0, |g| g.norm())));
        }
        let (Some(terms), Some(g)) = (terms, g) else { break };
        if t == cfg.max_steps {
            break;
        }
        if let Some(sc) = cfg.stuck {
            if w.potential.gradient(&x)?.norm() > sc.tol_f {
                if terms.cancellation() < sc.tol_g {
                    stuck_count += 1;
                } else {
                    stuck_count = 0;
                }
                if stuck_count >= sc.patience || window.stalled(&states, sc) {
                    status = Status::LocalMinimum;
                    break;
                }
            } else {
                stuck_count = 0;
            }
        }
        let next = normalized_step(&x, &g, cfg.eta, cfg.epsilon_norm);
        if !w.in_free_space(&next) {
            states.push(next);
            status = Status::Collision;
            break;
        }
        window.push((&next - &x).norm(), cfg.stuck.map_or(0, |sc| sc.patience));
        x = next;
        min_beta = min_beta.min(w.min_barrier(&x));
        if let Some(s) = aware.as_mut() {
            s.observe(w, &x, t + 1)?;
        }
        states.push(x.clone());
    }

    let steps = if status == Status::Collision { states.len() - 2 } else { states.len() - 1 };
    Ok(Trajectory {
        states,
        velocities: None,
        status,
        steps,
        min_beta_seen: min_beta,
        diagnostics: diag,
        discovery_log: aware.map(|s| s.discovery_log().to_vec()).unwrap_or_default(),
    })
}

/// Unit-mass double integrator ẍ = τ with τ = −∇φ_{k,𝒜}(x) − c_d ẋ,
/// integrated by symplectic Euler with dt = η. Flow controllers are
/// replaced by full awareness. Success additionally requires ‖v‖ < η.
pub fn run_second_order(
    w: &World,
    cfg: &SimConfig,
    x0: &Vector,
    v0: &Vector,
    damping_gain: f64,
) -> Result<Trajectory> {
    crate::error::check_dim(w.dim(), v0.len())?;
    if !(damping_gain > 0.0) {
        return Err(NavError::InvalidConfig("damping gain must be positive".into()));
    }
    let mut aware = match setup(w, cfg, x0)? {
        Some(s) => s,
        None => AwarenessState::full(w, 1.0)?,
    };
    let dt = cfg.eta;
    let mut x = x0.clone();
    let mut v = v0.clone();
    let mut states = vec![x.clone()];
    let mut velocities = vec![v.clone()];
    let mut diag = cfg.record_diagnostics.then(Vec::new);
    let mut min_beta = w.min_barrier(&x);
    let mut status = Status::Timeout;

    for t in 0..=cfg.max_steps {
        let done = (&x - w.target()).norm() < cfg.eta && v.norm() < cfg.eta;
        let grad = if done { None } else { Some(partial_grad(w, &aware, cfg.k(), &x)?) };
        if let Some(d) = diag.as_mut() {
            d.push(diagnostics(w, cfg.k(), &x, grad.as_ref().map_or(0.0, |g| g.norm())));
        }
        let Some(grad) = grad else {
            status = Status::Success;
            break;
        };
        if t == cfg.max_steps {
            break;
        }
        let tau = -grad - &v * damping_gain;
        let v_next = &v + tau * dt;
        let next = &x + &v_next * dt;
        if !w.in_free_space(&next) {
            states.push(next);
            velocities.push(v_next);
            status = Status::Collision;
            break;
        }
        x = next;
        v = v_next;
        min_beta = min_beta.min(w.min_barrier(&x));
        aware.observe(w, &x, t + 1)?;
        states.push(x.clone());
        velocities.push(v.clone());
    }

    let steps = if status == Status::Collision { states.len() - 2 } else { states.len() - 1 };
    let discovery_log = match cfg.controller {
        Controller::Switched { .. } => aware.discovery_log().to_vec(),
        _ => Vec::new(),
    };
    Ok(Trajectory {
        states,
        velocities: Some(velocities),
        status,
        steps,
        min_beta_seen: min_beta,
        diagnostics: diag,
        discovery_log,
    })
}
