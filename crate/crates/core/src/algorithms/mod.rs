//! Synchronous per-round update rules.
//!
//! Every algorithm is a state machine over node-local vectors. A round reads
//! only the previous round's snapshot of each node's neighbors, which models
//! the transmit/receive exchange without any actual messaging.
//!
//! Each type exposes a gradient-in/state-out update (`apply` or `step_with`)
//! that mirrors the math, and implements [`Algorithm`] so the runner can drive
//! it with a [`GradientOracle`].

mod dpsgd;
mod ecl;
mod gecl;
mod gt;
mod run;

pub use dpsgd::Dpsgd;
pub use ecl::{DualInit, Ecl};
pub use gecl::{initial_corrections, Gecl};
pub use gt::GradientTracking;
pub use run::{run, AlgorithmConfig, AlgorithmKind, RunSpec};

use crate::objectives::GradientOracle;
use crate::vectors::NodeVectors;

/// What a step tells the runner beyond the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Predicted movement of the network average: the rule guarantees
    /// `xbar(r+1) = xbar(r) - mean_shift` when its conservation law holds.
    pub mean_shift: Vec<f64>,
}

pub trait Algorithm {
    fn kind(&self) -> AlgorithmKind;

    fn params(&self) -> &NodeVectors;

    /// Runs round `round`, drawing gradients keyed by that round.
    fn step(&mut self, oracle: &dyn GradientOracle, round: u64) -> StepReport;

    /// Gradient corrections `c_i`, for rules that keep them.
    fn corrections(&self) -> Option<&NodeVectors> {
        None
    }

    /// `||sum_i p_i - sum_i g_i||` for gradient tracking.
    fn tracker_residual(&self) -> Option<f64> {
        None
    }
}
