//! Simulation and verification toolkit for the N-strain, P-patch
//! co-colonization SIS model and its slow-fast reduction to a spatial
//! replicator system.
//!
//! - [`model`]: parameters, connectivity matrices and state containers
//! - [`reduction`]: closed-form neutral equilibria, fitness and migration objects
//! - [`ode`]: adaptive Dormand–Prince integrator
//! - [`full`] / [`replicator`]: right-hand sides and drivers of both systems
//! - [`validator`]: numerical checks of the reduction's O(ε) accuracy
//! - [`config`]: JSON configuration schema

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod full;
pub mod model;
pub mod ode;
pub mod reduction;
pub mod replicator;
pub mod validator;

pub use error::{Error, Result};
