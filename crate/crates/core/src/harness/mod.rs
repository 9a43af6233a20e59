//! Experiment plumbing: configs, synthetic streams, runners, metrics and
//! file formats.

pub mod bounds;
pub mod config;
pub mod io;
pub mod metrics;
pub mod runner;
pub mod streams;

pub use bounds::{evaluate_bounds, BoundsReport};
pub use config::{Algorithm, ExperimentConfig, GarchSimConfig, PanelSimConfig};
pub use metrics::{
    compute_metrics, error_bar, BinReport, CoverageReport, IntervalFlag, IntervalRecord, LocalPoint, RunCounters,
    StepRecord,
};
pub use runner::{run_experiment, run_panel, Learner, RunOutput, SeriesRow, StreamInput};
pub use streams::{generate_beta_stream, NoiseLaw, OracleStep, Segment};
