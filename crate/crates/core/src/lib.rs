//! Online certainty-equivalent LQR control of an unknown linear system over a
//! bit-counted uplink, together with the matching lower-bound calculators and
//! benchmark experiments.
//!
//! The crate is organized around the life of a trial:
//!
//! - [`control_math`]: Riccati / Lyapunov solvers, gains, spectral quantities.
//! - [`plant_sim`]: seeded stochastic simulation with cost and regret accounting.
//! - [`ols`]: per-epoch least-squares identification and its confidence scalar.
//! - [`codec`]: bit-exact uplink encodings (Elias Gamma, dyadic init, lattice
//!   net, coordinate-wise quantizer) with per-message bit accounting.
//! - [`protocol`]: the plant and controller state machines, safe-set geometry,
//!   two-scale schedule, triggers, and the end-to-end trial runner.
//! - [`converse`]: the hard-instance constructor and bound calculators.
//! - [`experiments`]: benchmark systems and the multi-trial experiment runner.

pub mod codec;
pub mod control_math;
pub mod converse;
pub mod error;
pub mod experiments;
pub mod ols;
pub mod param;
pub mod plant_sim;
pub mod protocol;

pub use error::{Error, Result};
