//! The per-obstacle eccentricity condition
//! (λ_max/λ_min)(μ_max/μ_min) < 1 + d_i/(r_i μ_max).

use serde::Serialize;

use crate::geometry::World;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleCondition {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub obstacles: Vec<ObstacleCondition>,
    pub overall: bool,
}

pub fn check_condition(w: &World) -> ConditionReport {
    let kappa_q = w.potential.lambda_max() / w.potential.lambda_min();
    let obstacles: Vec<ObstacleCondition> = w
        .obstacles
        .iter()
        .enumerate()
        .map(|(index, o)| {
            let d = (&o.center - w.target()).norm();
            let lhs = kappa_q * o.mu_max() / o.mu_min();
            let rhs = 1.0 + d / (o.radius * o.mu_max());
            ObstacleCondition {
                index,
                lhs,
                rhs,
                satisfied: lhs < rhs,
            }
        })
        .collect();
    let overall = obstacles.iter().all(|c| c.satisfied);
    ConditionReport { obstacles, overall }
}
