//! Simulation and numerical verification of the extremes of
//! `d`-dimensional branching Brownian motion.
//!
//! * [`model`]: centering `m_t`, the radial window, coordinate helpers, and the
//!   tail normalizer.
//! * [`kernels`]: random streams, path grids, Brownian / bridge / Bessel
//!   sampling and transition densities.
//! * [`barrier`]: ballot probabilities, the barrier curves `B`, `B₀`, `Q` and
//!   grid-checked barrier events.
//! * [`girsanov`]: Bessel/Brownian change-of-measure weights and importance
//!   sampling.
//! * [`sim`]: the branching particle system, tree queries, good-particle
//!   counts and many-to-few oracles.
//! * [`stats`]: tail estimation and the checks built on top of it.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod model;

pub use error::{Error, Result};
pub mod barrier;
pub mod girsanov;
pub mod mc;
pub mod sim;
pub mod stats;

pub use stats::TailEstimate;
