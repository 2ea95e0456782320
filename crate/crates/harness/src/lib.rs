//! Evaluation and experiment tooling for ARMD forecasters: error metrics,
//! reference baselines, sampling-step search, `key = value` experiment specs
//! and a synthetic seasonal dataset.

pub mod baseline;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod metrics;
pub mod spec;
pub mod synthetic;

pub use baseline::{naive_baseline, LinearBaseline};
pub use error::{Error, Result, StageExt};
pub use evaluate::{evaluate, forecast_window, grid_search_sampling_steps, window_seed, GridResult};
pub use experiment::{prepare, prepare_series, run_experiment, run_repeat, ExperimentSummary, PreparedData, RepeatOutcome};
pub use metrics::{compute_metrics, MetricReport, WindowError};
pub use spec::ExperimentSpec;
