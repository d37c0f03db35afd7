//! Parameter grids of the published experiments.
//!
//! All presets use `d = 50`, `n = 25`, `10^4` rounds, the ring, the 5x5
//! torus and the complete graph, and the three algorithms with
//!
//! * D-PSGD: `eta = 1e-3`, Metropolis weights,
//! * ECL: `eta = 0.5`, `alpha_total = 1e3` (so `eta' ~ 1e-3`),
//! * G-ECL: `eta' = 1e-3`, Metropolis weights, no penalty.

use std::fmt;
use std::str::FromStr;

use super::config::{AlgorithmSpec, ExperimentConfig};
use crate::error::{Error, Result};
use crate::topology::TopologySpec;

pub const SWEEP: [f64; 6] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Error curves for `(zeta^2, sigma^2) in {0, 10}^2`.
    Fig2,
    /// `zeta^2` sweep at `sigma^2 = 0`.
    Fig3,
    /// `sigma^2` sweep at `zeta^2 = 0`.
    Fig4,
    /// `zeta^2` sweep at `sigma^2 = 10`.
    Fig5,
    /// `sigma^2` sweep at `zeta^2 = 10`.
    Fig6,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Self::Fig2, Self::Fig3, Self::Fig4, Self::Fig5, Self::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
        }
    }

    pub fn config(self, seed: u64, reps: usize) -> ExperimentConfig {
        let (zeta_sq, sigma_sq) = match self {
            Self::Fig2 => (vec![0.0, 10.0], vec![0.0, 10.0]),
            Self::Fig3 => (SWEEP.to_vec(), vec![0.0]),
            Self::Fig4 => (vec![0.0], SWEEP.to_vec()),
            Self::Fig5 => (SWEEP.to_vec(), vec![10.0]),
            Self::Fig6 => (vec![10.0], SWEEP.to_vec()),
        };
        ExperimentConfig {
            algorithms: preset_algorithms(),
            topologies: vec![
                TopologySpec::Ring,
                TopologySpec::Torus(None),
                TopologySpec::Complete,
            ],
            zeta_sq,
            sigma_sq,
            nodes: 25,
            dim: 50,
            rounds: 10_000,
            seed,
            reps,
            x0: 0.0,
            out: None,
        }
    }
}

pub fn preset_algorithms() -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec::gecl(1e-3),
        AlgorithmSpec::ecl(0.5, 1e3),
        AlgorithmSpec::dpsgd(1e-3),
    ]
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset `{s}`"), vec!["preset".into()]))
    }
}
