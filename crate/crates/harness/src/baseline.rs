//! Reference forecasters for sanity checks.

use armd_core::{SeriesMatrix, WindowSample};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, StageExt};

/// Ridge term added to the diagonal of the normal equations.
pub const RIDGE: f64 = 1e-6;

/// Repeats the history as the forecast.
pub fn naive_baseline(history: &SeriesMatrix) -> SeriesMatrix {
    history.clone()
}

/// A least-squares map `future = A history + c`, shared across channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBaseline {
    horizon: usize,
    /// Row-major `T x T`.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearBaseline {
    /// Solves the ridge-regularized normal equations over every (window, channel) pair.
    pub fn fit(windows: &[WindowSample]) -> Result<Self> {
        let first = windows.first().ok_or(Error::Stage {
            stage: "baseline",
            source: armd_core::Error::EmptyDataset,
        })?;
        let n = first.horizon();
        let dim = n + 1;
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        let mut cross = DMatrix::<f64>::zeros(dim, n);
        let mut feat = DVector::<f64>::zeros(dim);
        for w in windows {
            let ctx = w.context();
            for c in 0..ctx.n_channels() {
                let ch = ctx.channel(c);
                feat.as_mut_slice()[..n].copy_from_slice(&ch[..n]);
                feat[n] = 1.0;
                gram.ger(1.0, &feat, &feat, 1.0);
                let target = DVector::from_column_slice(&ch[n..]);
                cross.ger(1.0, &feat, &target, 1.0);
            }
        }
        for i in 0..dim {
            gram[(i, i)] += RIDGE;
        }
        let solution = gram.cholesky().ok_or(Error::Singular)?.solve(&cross);
        // solution is dim x n: column j holds the coefficients of output j.
        let mut weight = vec![0.0; n * n];
        let mut bias = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                weight[j * n + i] = solution[(i, j)];
            }
            bias[j] = solution[(n, j)];
        }
        Ok(Self { horizon: n, weight, bias })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn predict(&self, history: &SeriesMatrix) -> Result<SeriesMatrix> {
        let n = self.horizon;
        if history.n_timesteps() != n {
            return Err(Error::Stage {
                stage: "baseline",
                source: armd_core::Error::ShapeMismatch {
                    expected: format!("{n} timesteps"),
                    actual: format!("{}", history.n_timesteps()),
                },
            });
        }
        let mut out = Vec::with_capacity(history.as_slice().len());
        for ch in history.channels() {
            for j in 0..n {
                let row = &self.weight[j * n..(j + 1) * n];
                out.push(row.iter().zip(ch).map(|(a, x)| a * x).sum::<f64>() + self.bias[j]);
            }
        }
        SeriesMatrix::from_flat(history.n_channels(), n, out, Some(history.channel_names().to_vec())).stage("baseline")
    }
}
