//! Weisfeiler-Lehman distances between labeled measure Markov chains.
//!
//! The crate computes the depth-`k` WL distance between finite labeled
//! Markov chains by a nested optimal-transport recursion over cost matrices,
//! together with the cheaper k-step-kernel lower bound, graph-induced chains,
//! a colour-refinement reference test, Gromov-Wasserstein-side lower bounds
//! and forward evaluation of Markov chain neural networks.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`chain`] | probability vectors, Markov kernels, labeled chains, metric chains |
//! | [`ot`] | exact discrete OT, 1-D closed form, brute-force vertex oracle |
//! | [`wl`] | cost-matrix recursion, `wl_distance`, `wllb_distance` |
//! | [`graph`] | labeled graphs, q-Markov chains, relabeling, WL test, WWL baseline |
//! | [`gw`] | eccentricity, TLB-style bound, diameter, k-step couplings, distortion |
//! | [`mcnn`] | Markov chain neural network forward pass |
//!
//! The crate is `no_std` (with `alloc`) when built without the default
//! `std` feature. The `parallel` feature spreads the inner OT solves of a
//! lifting step over a rayon pool.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod chain;
pub mod error;
pub mod graph;
pub mod gw;
pub mod matrix;
pub mod mcnn;
pub mod ot;
pub mod wl;

pub use chain::{stationary_of, validate_lmmc, LabelMatrix, Lmmc, MarkovKernel, Mcms, ProbVec};
pub use error::{Error, Result};
pub use matrix::Matrix;

/// Absolute tolerance on probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-9;

/// Infinity-norm tolerance on `μᵀM = μᵀ`.
pub const STATIONARY_TOL: f64 = 1e-8;

/// Marginal tolerance of couplings produced by the OT solver.
pub const COUPLING_TOL: f64 = 1e-7;

/// Values at or below this threshold count as a zero distance.
pub const ZERO_THRESHOLD: f64 = 1e-7;
