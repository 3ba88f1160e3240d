//! Contextual values for generalized measurements.
//!
//! A detector that reports outcomes `y` correlated with a system property
//! `F` can estimate `<F>` without measuring `F` directly: assign each
//! outcome a weight `f_Y(y)` such that the weighted outcome probabilities
//! reproduce the moments of `F`. Those weights are the contextual values of
//! `F` in the context of the detector. This crate builds the supporting
//! machinery end to end:
//!
//! - finite probability spaces, conditioning, and invasive (disturbing)
//!   measurement kernels ([`prob`]);
//! - detector response models, the effects (POVM elements) they generate,
//!   and the outcome channels of invasive detectors ([`detector`]);
//! - contextual-value solvers built on an in-module pseudoinverse, for both
//!   discrete and continuous outcome spaces ([`solver`]);
//! - quantum states, measurement operators, conditioned averages, and the
//!   weak-value limit ([`quantum`]);
//! - seeded Monte Carlo estimation with moment-propagation error bounds
//!   ([`estimator`]);
//! - ready-made textbook scenarios ([`scenarios`]).

pub mod detector;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod prob;
pub mod quantum;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
