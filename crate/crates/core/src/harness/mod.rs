//! Experiment orchestration: configs, sweeps, CSV records and presets.

mod config;
mod presets;
mod record;
mod sweep;

pub use config::{AlgorithmSpec, ExperimentConfig};
pub use presets::{preset_algorithms, Preset, SWEEP};
pub use record::{RoundMetrics, RunRecord, COLUMNS};
pub use sweep::{
    expand, linear_fit, run_experiment, run_point, summarize, LinearFit, SummaryRow, SweepPoint,
};
