//! Stochastic gradient Langevin dynamics with minibatch gradient oracles,
//! the reflection coupling of two SGLD chains, and the closed-form constants
//! that certify Wasserstein contraction of the coupled pair.
//!
//! This crate is `no_std` (it needs `alloc`). Ensembles, IO and the command
//! line runner live in the `sgld` crate.
//!
//! The modules follow the flow of an experiment:
//!
//! - [`targets`]: energies given as averages of component gradients, minibatch
//!   oracles, non-gradient drifts, and a sampling-based assumption checker.
//! - [`constants`]: contraction geometry `(R, κ)`, the concave distance `f`,
//!   the rate `c`, the prefactor `c0` and the admissible step-size budget.
//! - [`noise`]: counter-based Gaussian streams, one per chain or pair.
//! - [`dynamics`]: the SGLD / random-batch Euler–Maruyama step and its
//!   frozen-drift substep interpolation.
//! - [`coupling`]: reflection and synchronous couplings with merge detection.
//! - [`diagnostics`]: W1 estimators, rate fitting, tail profiles, moments and
//!   the basic statistical tests used to turn ensembles into verdicts.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod constants;
pub mod coupling;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod noise;
pub mod targets;

pub use error::{Error, Result};
