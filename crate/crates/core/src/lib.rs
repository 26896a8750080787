//! Numerical laboratory for continuous-time actor–critic machinery.
//!
//! The crate provides the building blocks of a Hamiltonian temporal-difference
//! critic for control-affine and stochastic environments, together with the
//! auditing tools needed to study when robustifying-term stabilization schemes
//! fail and when the critic weight error stays bounded:
//!
//! - [`features`] — polynomial basis maps with analytic gradients and Hessians,
//! - [`envs`] — benchmark environments (a converse-optimality counterexample,
//!   a discounted stochastic LQ plant, a scalar adaptive-control plant) and
//!   fixed-step integrators,
//! - [`critic`] — data vectors, TD errors, experience replay with a
//!   persistence-of-excitation gate, and the critic weight update law,
//! - [`actor`] — greedy policies, the robustifying term, and the classical
//!   adaptive-control baseline controller,
//! - [`lyapunov`] — Lyapunov-derivative decompositions, the positive-derivative
//!   region of the counterexample, and the sign audit of the claimed bound,
//! - [`convergence`] — a Monte Carlo harness that simulates the stochastic
//!   critic error and checks the mean-square bound
//!   `E[..] <= exp(-alpha*eps*t)*e0 + D*sup sqrt(E[..])`.
//!
//! Everything is deterministic given a seed: noise streams come from
//! counter-seeded ChaCha generators and all integrators use fixed steps.

// `!(x > 0.0)` is used on purpose in validations: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actor;
pub mod convergence;
pub mod critic;
pub mod envs;
pub mod error;
pub mod features;
pub mod lyapunov;

pub use error::{Error, Result};

/// State vector of an environment.
pub type State = nalgebra::DVector<f64>;
/// Control (input) vector of an environment.
pub type Control = nalgebra::DVector<f64>;
