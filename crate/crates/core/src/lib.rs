//! Navigation of quadratic potentials in worlds of ellipsoidal obstacles.
//!
//! The crate provides the world model ([`geometry`]), the three navigation
//! vector fields and the Rimon-Koditschek potential ([`flows`]), the
//! partial-knowledge switched controller ([`switched`]), a normalized
//! fixed-step integrator ([`integrate`]), executable versions of the
//! convergence machinery ([`analysis`]), seeded world generation
//! ([`worldgen`]) and a Monte Carlo harness ([`benchmark`]).

pub mod analysis;
pub mod benchmark;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod svg;
pub mod switched;
pub mod worldgen;
pub mod integrate;

pub use error::{NavError, Result};
pub use flows::{FlowKind, FlowParams};
pub use geometry::{Ellipsoid, QuadraticPotential, SpdMatrix, Violation, Workspace, World};
pub use integrate::{Controller, SimConfig, Status, Trajectory};

/// Column vector of workspace coordinates.
pub type Vector = nalgebra::DVector<f64>;
/// Dense square matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
