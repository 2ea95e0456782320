//! End-to-end runs: split, normalize, train per seed, pick sampling steps on
//! validation, score on test and write reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use armd_core::io::{chronological_split, fit_normalizer, load_csv, save_model, write_loss_curve, ModelArtifact, NormalizationStats};
use armd_core::{
    make_window_samples, train_with_checkpoints, BalanceParams, DevolutionModel, DiffusionSchedule, SeriesMatrix,
    TrainReport, WindowSample,
};
use rayon::prelude::*;

use crate::baseline::{naive_baseline, LinearBaseline};
use crate::error::{Error, Result, StageExt};
use crate::evaluate::{evaluate, forecast_window, grid_search_sampling_steps, GridResult};
use crate::metrics::{compute_metrics, MetricReport};
use crate::spec::ExperimentSpec;

/// A dataset split, normalized with training statistics and cut into windows.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub stats: NormalizationStats,
    pub channel_names: Vec<String>,
    pub split_lengths: (usize, usize, usize),
    pub train_windows: Vec<WindowSample>,
    pub valid_windows: Vec<WindowSample>,
    pub test_windows: Vec<WindowSample>,
}

/// Normalizes with `stats` (or fits them on the training split) and windows every split.
pub fn prepare_series(
    series: &SeriesMatrix,
    spec: &ExperimentSpec,
    stats: Option<NormalizationStats>,
) -> Result<PreparedData> {
    let t = spec.horizon;
    let (train, valid, test) = chronological_split(series, &spec.split, t).stage("split")?;
    let stats = match stats {
        Some(s) => s,
        None => fit_normalizer(&train).stage("normalize")?,
    };
    let norm = |s: &SeriesMatrix| stats.normalize(s).stage("normalize");
    let (train_n, valid_n, test_n) = (norm(&train)?, norm(&valid)?, norm(&test)?);
    Ok(PreparedData {
        channel_names: series.channel_names().to_vec(),
        split_lengths: (train.n_timesteps(), valid.n_timesteps(), test.n_timesteps()),
        train_windows: make_window_samples(&train_n, t, spec.train_stride).stage("windows")?,
        valid_windows: make_window_samples(&valid_n, t, spec.eval_stride).stage("windows")?,
        test_windows: make_window_samples(&test_n, t, spec.eval_stride).stage("windows")?,
        stats,
    })
}

pub fn prepare(spec: &ExperimentSpec) -> Result<PreparedData> {
    let series = load_csv(&spec.dataset).stage("load")?;
    prepare_series(&series, spec, None)
}

/// One training seed taken through grid search and test evaluation.
#[derive(Debug, Clone)]
pub struct RepeatOutcome {
    pub seed: u64,
    pub model: DevolutionModel,
    pub train: TrainReport,
    pub grid: GridResult,
    pub test: MetricReport,
}

impl RepeatOutcome {
    pub fn n_steps(&self) -> usize {
        self.grid.best_steps
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub balance: BalanceParams,
    /// Validation MSE per balance candidate when searched.
    pub balance_scores: Vec<(BalanceParams, f64)>,
    pub repeats: Vec<RepeatOutcome>,
    pub mse: f64,
    pub mae: f64,
    pub mse_std: f64,
    pub mae_std: f64,
    pub naive: Option<MetricReport>,
    pub linear: Option<MetricReport>,
    /// Contents of `summary.txt`; contains no timing, so it is reproducible byte for byte.
    pub text: String,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        stage: "report",
        path: path.to_path_buf(),
        source,
    }
}

/// Trains one seed, grid-searches the step count on validation and scores the test windows.
pub fn run_repeat(
    spec: &ExperimentSpec,
    data: &PreparedData,
    schedule: &DiffusionSchedule,
    balance: BalanceParams,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<RepeatOutcome> {
    let mut cfg = spec.train_config(seed);
    cfg.balance = balance;
    let every = if checkpoint_dir.is_some() { spec.checkpoint_every } else { 0 };
    let (model, train) = train_with_checkpoints(&data.train_windows, schedule, &cfg, every, |iter, model| {
        let Some(dir) = checkpoint_dir else { return Ok(()) };
        let artifact = ModelArtifact::new(model.clone(), schedule.clone(), data.stats.clone(), data.channel_names.clone())?;
        save_model(dir.join(format!("seed{seed}_iter{iter}.armd")), &artifact)
    })
    .stage("train")?;
    let grid = grid_search_sampling_steps(&model, &data.valid_windows, schedule, &spec.sampling_grid, &spec.sampler(1))?;
    let test = evaluate(&model, &data.test_windows, schedule, &spec.sampler(grid.best_steps))?;
    Ok(RepeatOutcome {
        seed,
        model,
        train,
        grid,
        test,
    })
}

/// Trains one model per balance candidate and returns validation MSEs in grid order.
pub fn search_balance(
    spec: &ExperimentSpec,
    data: &PreparedData,
    schedule: &DiffusionSchedule,
) -> Result<Vec<(BalanceParams, f64)>> {
    BalanceParams::grid()
        .into_par_iter()
        .map(|balance| {
            // A candidate that degenerates during training is scored as infinitely bad.
            let score = match run_repeat(spec, data, schedule, balance, spec.train.seed, None) {
                Ok(r) => r.grid.best_mse,
                Err(Error::Stage { source: armd_core::Error::DegenerateBalance { .. }, .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok((balance, score))
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    spec.validate()?;
    let schedule = spec.schedule()?;
    let data = prepare(spec)?;
    let out = &spec.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let checkpoint_dir = (spec.checkpoint_every > 0).then(|| out.join("checkpoints"));
    if let Some(dir) = &checkpoint_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }

    let balance_scores = if spec.balance_search {
        search_balance(spec, &data, &schedule)?
    } else {
        Vec::new()
    };
    let balance = balance_scores
        .iter()
        .fold(None::<(BalanceParams, f64)>, |best, &(b, s)| match best {
            Some((_, m)) if m <= s => best,
            _ => Some((b, s)),
        })
        .map_or(spec.balance(), |(b, _)| b);

    let seeds: Vec<u64> = (0..spec.n_repeats as u64).map(|i| spec.train.seed + i).collect();
    let repeats: Vec<RepeatOutcome> = seeds
        .par_iter()
        .map(|&seed| run_repeat(spec, &data, &schedule, balance, seed, checkpoint_dir.as_deref()))
        .collect::<Result<_>>()?;

    let (naive, linear) = if spec.baselines {
        let naive = MetricReport::from_windows(
            data.test_windows
                .iter()
                .map(|w| compute_metrics(&naive_baseline(&w.history()), &w.future()))
                .collect::<Result<_>>()?,
        )?;
        let fit = LinearBaseline::fit(&data.train_windows)?;
        let linear = MetricReport::from_windows(
            data.test_windows
                .iter()
                .map(|w| compute_metrics(&fit.predict(&w.history())?, &w.future()))
                .collect::<Result<_>>()?,
        )?;
        (Some(naive), Some(linear))
    } else {
        (None, None)
    };

    let (mse, mse_std) = mean_std(&repeats.iter().map(|r| r.test.mse).collect::<Vec<_>>());
    let (mae, mae_std) = mean_std(&repeats.iter().map(|r| r.test.mae).collect::<Vec<_>>());
    let mut summary = ExperimentSummary {
        balance,
        balance_scores,
        repeats,
        mse,
        mae,
        mse_std,
        mae_std,
        naive,
        linear,
        text: String::new(),
    };
    summary.text = render_summary(spec, &data, &summary);
    write_reports(spec, &data, &schedule, &summary)?;
    Ok(summary)
}

fn render_summary(spec: &ExperimentSpec, data: &PreparedData, s: &ExperimentSummary) -> String {
    let mut o = String::new();
    let t = &spec.train;
    let _ = writeln!(o, "# test metrics are on the normalized scale, averaged over repeats");
    let _ = writeln!(o, "# each repeat trains from its own seed; sampling itself is deterministic");
    let _ = writeln!(o, "dataset={}", spec.dataset.display());
    let _ = writeln!(o, "channels={}", data.channel_names.join(";"));
    let (a, b, c) = data.split_lengths;
    let _ = writeln!(o, "split={a}/{b}/{c}");
    let _ = writeln!(
        o,
        "windows={}/{}/{}",
        data.train_windows.len(),
        data.valid_windows.len(),
        data.test_windows.len()
    );
    let _ = writeln!(o, "horizon={}", spec.horizon);
    let _ = writeln!(o, "beta_start={}\nbeta_end={}", spec.beta_start, spec.beta_end);
    let _ = writeln!(o, "iterations={}\nbatch_size={}\nlearning_rate={}", t.iterations, t.batch_size, t.learning_rate);
    let _ = writeln!(o, "state_generator={}", t.state_generator.name());
    let _ = writeln!(o, "deviation={}", t.deviation.enabled);
    let _ = writeln!(o, "sampling_noise={}", spec.add_sampling_noise);
    if spec.add_sampling_noise {
        let _ = writeln!(o, "noise_fraction={}", spec.noise_fraction);
    }
    let grid: Vec<String> = spec.sampling_grid.iter().map(usize::to_string).collect();
    let _ = writeln!(o, "sampling_grid={}", grid.join(","));
    let _ = writeln!(o, "hyper_b={}\nhyper_c={}\nhyper_d={}", s.balance.b, s.balance.c, s.balance.d);
    for (bp, score) in &s.balance_scores {
        let _ = writeln!(o, "balance_search.{},{},{}.valid_mse={score}", bp.b, bp.c, bp.d);
    }
    let _ = writeln!(o, "repeats={}", s.repeats.len());
    for (i, r) in s.repeats.iter().enumerate() {
        let _ = writeln!(o, "repeat.{i}.seed={}", r.seed);
        let _ = writeln!(o, "repeat.{i}.final_train_loss={}", r.train.final_loss);
        let _ = writeln!(o, "repeat.{i}.n_steps={}", r.n_steps());
        let _ = writeln!(o, "repeat.{i}.valid_mse={}", r.grid.best_mse);
        let _ = writeln!(o, "repeat.{i}.test_mse={}", r.test.mse);
        let _ = writeln!(o, "repeat.{i}.test_mae={}", r.test.mae);
    }
    let _ = writeln!(o, "mse={}\nmse_std={}\nmae={}\nmae_std={}", s.mse, s.mse_std, s.mae, s.mae_std);
    if let (Some(n), Some(l)) = (&s.naive, &s.linear) {
        let _ = writeln!(o, "baseline.naive.mse={}\nbaseline.naive.mae={}", n.mse, n.mae);
        let _ = writeln!(o, "baseline.linear.mse={}\nbaseline.linear.mae={}", l.mse, l.mae);
    }
    o
}

fn write_file(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(io_err(&path))
}

fn write_reports(
    spec: &ExperimentSpec,
    data: &PreparedData,
    schedule: &DiffusionSchedule,
    s: &ExperimentSummary,
) -> Result<()> {
    let out = &spec.output_dir;
    write_file(out.join("summary.txt"), &s.text)?;

    let mut metrics = String::from("seed,n_steps,valid_mse,test_mse,test_mae\n");
    let mut grid = String::from("seed,n_steps,valid_mse,valid_mae\n");
    let mut timing = String::from("seed,train_seconds\n");
    for r in &s.repeats {
        let _ = writeln!(metrics, "{},{},{},{},{}", r.seed, r.n_steps(), r.grid.best_mse, r.test.mse, r.test.mae);
        for (n, mse, mae) in &r.grid.scores {
            let _ = writeln!(grid, "{},{n},{mse},{mae}", r.seed);
        }
        let _ = writeln!(timing, "{},{}", r.seed, r.train.wall_time);
        write_loss_curve(out.join(format!("loss_curve_seed{}.csv", r.seed)), &r.train.loss_curve).stage("report")?;
        let artifact = ModelArtifact::new(r.model.clone(), schedule.clone(), data.stats.clone(), data.channel_names.clone())
            .stage("report")?;
        save_model(out.join(format!("model_seed{}.armd", r.seed)), &artifact).stage("report")?;
    }
    write_file(out.join("metrics.csv"), &metrics)?;
    write_file(out.join("validation_grid.csv"), &grid)?;
    write_file(out.join("timing.csv"), &timing)?;

    if let Some(first) = s.repeats.first() {
        let every = if spec.prediction_every == 0 { spec.horizon } else { spec.prediction_every };
        let cfg = spec.sampler(first.n_steps());
        let mut csv = String::from("window,origin,channel,step,prediction,truth\n");
        for (i, w) in data.test_windows.iter().enumerate().step_by(every) {
            let pred = forecast_window(&first.model, w, i, schedule, &cfg).stage("report")?;
            let truth = w.future();
            for (c, name) in data.channel_names.iter().enumerate() {
                for h in 0..spec.horizon {
                    let _ = writeln!(
                        csv,
                        "{i},{},{name},{},{},{}",
                        w.origin_index(),
                        h + 1,
                        pred.get(c, h),
                        truth.get(c, h)
                    );
                }
            }
        }
        write_file(out.join(format!("predictions_seed{}.csv", first.seed)), &csv)?;
    }
    Ok(())
}
