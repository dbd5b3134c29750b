//! Winfree model toolkit: simulation, equilibria, coupling thresholds,
//! probability bounds and Monte Carlo checks.
//!
//! Modules follow the workflow: [`model`] defines the vector field,
//! [`integrate`] runs it, [`thresholds`] evaluates closed-form criteria,
//! [`equilibria`] enumerates fixed points, [`montecarlo`] estimates the
//! probabilities the bounds control, and [`cli`] wires them to the binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equilibria;
pub mod error;
pub mod integrate;
pub mod model;
pub mod montecarlo;
pub mod thresholds;

pub use error::{Error, Result};
pub use model::{InteractionSpec, PhaseState, SystemConfig};
