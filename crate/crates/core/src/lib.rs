//! Simulation and verification toolkit for a one-dimensional spin chain in a
//! quenched ±1 random field with a finite-range pair interaction of strength
//! `gamma` and range `1/(2 gamma)`.
//!
//! The crate builds the objects the analysis of this model rests on and
//! checks every checkable claim at desk scale:
//!
//! * [`mean_field`] — two-component free energy, phase region, interface
//!   profile and surface tension;
//! * [`params`] — the scale schedule tying all modules together;
//! * [`spin_model`] — the microscopic Hamiltonian, Gibbs sampling, exact
//!   enumeration on tiny volumes;
//! * [`coarse_grain`] — block decomposition of the field, block-spin
//!   magnetizations, phase indicators and interface detection;
//! * [`cumulants`] — exact cumulant generating functions of the random
//!   energy, the per-block energy differences, their block aggregates and
//!   the rescaled random walk;
//! * [`renewal`] — drawdown extrema, maximal elongations, the closed-form
//!   renewal laws and statistical comparison harnesses;
//! * [`profiles`] — two-phase step profiles, the rate functional and its
//!   minimizer checks, a computable upper bound on the path-space metric.

pub mod coarse_grain;
pub mod cumulants;
pub mod error;
pub mod mean_field;
pub mod params;
pub mod profiles;
pub mod renewal;
pub mod report;
pub mod spin_model;
pub mod stats;

pub use error::{Error, Result};
