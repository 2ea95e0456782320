use armd_core::SeriesMatrix;

use crate::error::{Error, Result, StageExt};

/// Error of one forecast window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowError {
    pub mse: f64,
    pub mae: f64,
}

/// MSE and MAE over all elements of one prediction.
pub fn compute_metrics(pred: &SeriesMatrix, truth: &SeriesMatrix) -> Result<WindowError> {
    pred.ensure_same_shape(truth).stage("evaluate")?;
    let n = pred.as_slice().len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, t) in pred.as_slice().iter().zip(truth.as_slice()) {
        let e = p - t;
        se += e * e;
        ae += e.abs();
    }
    Ok(WindowError { mse: se / n, mae: ae / n })
}

/// Aggregate over equally sized windows; the aggregate equals the mean of the per-window values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub mae: f64,
    pub n_windows: usize,
    pub per_window: Vec<WindowError>,
}

impl MetricReport {
    pub fn from_windows(per_window: Vec<WindowError>) -> Result<Self> {
        if per_window.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let n = per_window.len() as f64;
        Ok(Self {
            mse: per_window.iter().map(|w| w.mse).sum::<f64>() / n,
            mae: per_window.iter().map(|w| w.mae).sum::<f64>() / n,
            n_windows: per_window.len(),
            per_window,
        })
    }
}
