//! Simulation and verification lab for the large-damping limit of kinetic
//! Langevin diffusions on the unit torus.
//!
//! The crate samples the stationary measures of the kinetic process and of its
//! overdamped limit, builds the anticipative coupling between the two on a
//! shared Brownian path, and estimates Wasserstein-1 distances between the
//! resulting empirical measures.

pub mod coupling;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod ot;
pub mod sampling;
pub mod sde;
pub mod stats;

pub use error::{LabError, Result};
pub use exec::Execution;
