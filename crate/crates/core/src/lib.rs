//! Discrete Monge-Ampère gravitation.
//!
//! Particle clouds `X ∈ (R^d)^N` attracted to a fixed lattice `A` through the
//! permutation potential `f(X) = max_σ X · A^σ` and its entropic smoothing.
//! The crate provides the potentials, the action functionals whose minimizers
//! describe sticky-particle motion, a descent/continuation solver, an exact
//! 1D oracle for small systems, an event-driven sticky-particle simulator,
//! the heat-kernel companion flow, and post-hoc trajectory diagnostics.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the usual double-precision instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod analysis;
pub mod cloud;
pub mod error;
pub mod heatwave;
mod linalg;
pub mod minimizer;
pub mod partition;
pub mod perm;
pub mod potential;
pub mod scalar;
pub mod sticky;
pub mod trajectory;

pub use cloud::{Cloud, Lattice};
pub use error::{Error, Result};
pub use partition::{partition_of, project_class_average, Partition};
pub use perm::Perm;
pub use potential::{delta_gap, internal_energy, min_norm_point, optimal_assignment, Potential};
pub use scalar::Scalar;
pub use trajectory::{Gauge, Trajectory};

pub type Cloud64 = Cloud<f64>;
pub type Lattice64 = Lattice<f64>;
pub type Potential64 = Potential<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Cloud32 = Cloud<f32>;
pub type Lattice32 = Lattice<f32>;
pub type Potential32 = Potential<f32>;
pub type Trajectory32 = Trajectory<f32>;
