use armd_core::{forecast, DiffusionSchedule, Devolver, SamplerConfig, SeriesMatrix, WindowSample};

use crate::error::{Error, Result, StageExt};
use crate::metrics::{compute_metrics, MetricReport};

/// Noise seed for window `index`, so each window draws an independent stream.
pub fn window_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Forecast of one window with its per-window noise seed.
pub fn forecast_window<D: Devolver + ?Sized>(
    model: &D,
    window: &WindowSample,
    index: usize,
    schedule: &DiffusionSchedule,
    config: &SamplerConfig,
) -> armd_core::Result<SeriesMatrix> {
    let cfg = SamplerConfig {
        seed: window_seed(config.seed, index),
        keep_trajectory: Some(false),
        ..*config
    };
    Ok(forecast(model, &window.history(), schedule, &cfg)?.prediction)
}

/// Forecasts every window and scores it against its future.
pub fn evaluate<D: Devolver + ?Sized>(
    model: &D,
    windows: &[WindowSample],
    schedule: &DiffusionSchedule,
    config: &SamplerConfig,
) -> Result<MetricReport> {
    let mut per_window = Vec::with_capacity(windows.len());
    for (i, w) in windows.iter().enumerate() {
        let pred = forecast_window(model, w, i, schedule, config).stage("evaluate")?;
        per_window.push(compute_metrics(&pred, &w.future())?);
    }
    MetricReport::from_windows(per_window)
}

/// Validation score of every candidate step count.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_steps: usize,
    pub best_mse: f64,
    /// `(n_steps, validation MSE, validation MAE)` in grid order.
    pub scores: Vec<(usize, f64, f64)>,
}

/// Picks the step count with the lowest validation MSE. Candidates above `T`
/// are skipped; ties keep the earlier candidate.
pub fn grid_search_sampling_steps<D: Devolver + ?Sized>(
    model: &D,
    valid: &[WindowSample],
    schedule: &DiffusionSchedule,
    grid: &[usize],
    base: &SamplerConfig,
) -> Result<GridResult> {
    if valid.is_empty() {
        return Err(Error::EmptyValidation);
    }
    let mut scores = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &n in grid.iter().filter(|&&n| n >= 1 && n <= schedule.horizon()) {
        let cfg = SamplerConfig { n_steps: n, ..*base };
        let report = evaluate(model, valid, schedule, &cfg).map_err(|e| match e {
            Error::Stage { source, .. } => Error::Stage { stage: "grid-search", source },
            other => other,
        })?;
        if best.is_none_or(|(_, m)| report.mse < m) {
            best = Some((n, report.mse));
        }
        scores.push((n, report.mse, report.mae));
    }
    let (best_steps, best_mse) = best.ok_or_else(|| Error::ConfigValue {
        key: "sampling_steps".into(),
        message: format!("no candidate fits T = {}", schedule.horizon()),
    })?;
    Ok(GridResult { best_steps, best_mse, scores })
}
