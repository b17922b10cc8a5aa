//! Numerical laboratory for the vector-valued Witsenhausen counterexample with
//! causal controllers and channel feedback.
//!
//! The crate computes achievable cost regions of the two-controller quadratic
//! team problem from single-letter characterizations on discretized alphabets,
//! simulates symbol-by-symbol coding schemes at finite block length, and
//! verifies a binary time-sharing example in closed form.
//!
//! Module map:
//! - [`model`]: Gaussian problem instance and its discretization.
//! - [`measures`]: entropy and (conditional) mutual information on joint tensors.
//! - [`designs`]: factorized single-letter strategies and their joint laws.
//! - [`solver`]: scalarized Pareto frontier search for both cost regions.
//! - [`simulator`]: Monte Carlo block simulation and achievability tests.
//! - [`binary_example`]: exact verification of the binary time-sharing example.
//! - [`affine`]: closed-form affine-policy anchors.
//! - [`cli`]: config parsing, experiment dispatch, and file emission.

// Index-based loops over parallel arrays and explicit index arithmetic are
// the house style in the numeric kernels and brute-force test oracles.
#![allow(clippy::needless_range_loop, clippy::identity_op)]

pub mod affine;
pub mod binary_example;
pub mod cli;
pub mod designs;
pub mod error;
pub mod measures;
pub mod model;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};

/// Deterministic 64-bit mixer (splitmix64 finalizer).
///
/// Used to derive independent per-work-item seeds from a global seed so that
/// results do not depend on scheduling order.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
