//! Deterministic simulator for decentralized stochastic optimization.
//!
//! Implements four synchronous update rules over an undirected network of
//! `n` nodes, each holding a local objective `f_i`:
//!
//! * gossip SGD (D-PSGD): mix neighbors' parameters after a local step,
//! * edge-consensus learning (ECL): a primal-dual method with per-edge dual
//!   variables obtained from Douglas-Rachford splitting,
//! * generalized ECL (G-ECL): gossip averaging plus a gradient correction
//!   `c_i` whose network-wide sum is conserved,
//! * gradient tracking (GT).
//!
//! The [`verification`] module couples runs of these algorithms to check
//! that ECL and G-ECL produce the same iterates, that the induced weights
//! form a mixing matrix, and that the correction terms sum to zero. The
//! [`harness`] module expands parameter sweeps, runs them in parallel and
//! writes one CSV per run.

pub mod algorithms;
pub mod error;
pub mod harness;
pub mod mixing;
pub mod objectives;
pub mod rng;
pub mod topology;
pub mod vectors;
pub mod verification;

pub use error::{Error, Result};
