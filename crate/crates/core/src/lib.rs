//! Auto-regressive moving diffusion (ARMD) for time-series forecasting.
//!
//! Forecasting is treated as a deterministic diffusion over a sliding window:
//! the future series is the initial state, the history of equal length the
//! final state, and each intermediate state is the window moved `t` steps into
//! the past. A linear devolution network learns to undo that evolution, and
//! a skip-step reverse sampler turns the history into a forecast in as few as
//! one network call.
//!
//! ```
//! use armd_core::{make_window_samples, train, forecast, DiffusionSchedule, SamplerConfig, SeriesMatrix, TrainConfig};
//!
//! let values: Vec<f64> = (0..64).map(|i| (i as f64 * 0.4).sin()).collect();
//! let series = SeriesMatrix::from_channels(vec![values], None).unwrap();
//! let schedule = DiffusionSchedule::with_defaults(8).unwrap();
//! let windows = make_window_samples(&series, 8, 1).unwrap();
//! let config = TrainConfig { iterations: 20, batch_size: 8, ..TrainConfig::default() };
//! let (model, report) = train(&windows, &schedule, &config).unwrap();
//! assert_eq!(report.loss_curve.len(), 20);
//! let run = forecast(&model, &windows[0].history(), &schedule, &SamplerConfig::with_steps(2)).unwrap();
//! assert_eq!(run.prediction.n_timesteps(), 8);
//! ```

pub mod devolution;
pub mod error;
pub mod evolution;
pub mod io;
pub mod optim;
pub mod sampler;
pub mod schedule;
pub mod series;
pub mod trainer;
pub mod window;

pub use devolution::{backward, l1_loss, predict_trend, BalanceParams, DevolutionModel, Devolver, Gradients, PredictionPair};
pub use error::{Error, Result};
pub use evolution::{apply_deviation, diffuse, evolution_trend, interpolate_state, slide, DeviationConfig, DiffusedState, StateGenerator};
pub use sampler::{forecast, sample_step, step_sequence, ForecastRun, SamplerConfig, SAMPLING_STEP_GRID};
pub use schedule::DiffusionSchedule;
pub use series::SeriesMatrix;
pub use trainer::{train, train_with_checkpoints, TrainConfig, TrainReport};
pub use window::{make_window_samples, WindowSample};
