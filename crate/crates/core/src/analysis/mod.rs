//! Executable versions of the convergence machinery: the eccentricity
//! condition, Lyapunov candidates and their violation regions, convex
//! separation, configuration graphs, stuck detection and lemma-level checks.

pub mod condition;
pub mod graph;
pub mod lemmas;
pub mod lyapunov;
pub mod separation;
pub mod stuck;

pub use condition::{check_condition, ConditionReport, ObstacleCondition};
pub use graph::{build_config_graph, condition_one, ConfigGraph, GraphEdge, PairVerdict};
pub use lemmas::{
    aligned_equilibrium, one_way_crossing_check, outward_motion_threshold, outward_normal,
    unstable_equilibrium_check, zone_boundary_point, CrossingReport, EquilibriumReport,
};
pub use lyapunov::{
    default_epsilon, distance_to_obstacle, global_v, global_vdot, in_repulsion_zone,
    in_violation_set, local_v_i, local_vtilde_i, zone_max, DEFAULT_DELTA,
};
pub use separation::{convex_distance, ConvexSet, Hyperplane, SeparationResult};
pub use stuck::{gradient_cancellation, stuck_detector, DEFAULT_TOL_F, DEFAULT_TOL_G};
