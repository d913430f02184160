//! Toolkit for trading measurement incompatibility against sampling cost.
//!
//! A unital channel `E` can push several non-commuting observables onto
//! single-qubit Pauli-Z readouts at once, at the price of a commensuration
//! factor `alpha`: `tr(E(rho) Z_i) = alpha * tr(rho O_i)`. This crate builds
//! the Choi matrix of the adjoint map, solves for the largest feasible
//! `alpha`, trains mixed-unitary channel approximations, and estimates the
//! sampling overhead of the scaled Z estimators against direct projective
//! measurement.
//!
//! Everything stochastic takes an explicit 64-bit seed and is deterministic
//! for a given seed, including parallel-free aggregation order.

pub mod alpha;
pub mod choi;
pub mod error;
pub mod matrix;
pub mod observable;
pub mod optim;
pub mod pauli;
pub mod presets;
pub mod qnn;
pub mod rng;
pub mod sampling;
pub mod sdp;
pub mod spectrum;

pub use error::{Error, Result};
