//! Scenario configuration, scheme pipelines and Monte Carlo sweeps.

pub mod config;
pub mod pipeline;
pub mod sweep;

pub use config::{AutoOr, DetectionMode, Preset, ScenarioConfig, Scheme};
pub use pipeline::{run_pm, run_realization, run_stimpdc, stimpdc_round_trip, Detection, Geometry, StateSet};
pub use sweep::{manifest, realization_seed, sweep, to_csv, write_outputs, PointFailure, SweepOutput, SweepRow, CSV_HEADER};
