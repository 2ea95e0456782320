use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use armd_core::io::{load_csv, load_model, save_model, write_loss_curve, write_series_csv, ModelArtifact};
use armd_core::{forecast, train_with_checkpoints, DiffusionSchedule, SamplerConfig};
use armd_harness::{evaluate, grid_search_sampling_steps, prepare_series, run_experiment, ExperimentSpec, StageExt};
use clap::{Args, Parser, Subcommand};

/// Auto-regressive moving diffusion forecasting.
#[derive(Parser)]
#[command(name = "armd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set iterations=500`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        spec.apply_overrides(&self.overrides)?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on the training split of a CSV dataset
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Output directory for model.armd, loss_curve.csv and checkpoints
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Forecast the next T steps after the last T rows of a CSV file
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Add sampling noise on every jump but the last
        #[arg(long)]
        noise: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score a model on the test split of a dataset
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Sampling steps; chosen on the validation split when omitted
        #[arg(long)]
        steps: Option<usize>,
        /// Also write the metrics as key=value lines to this file
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run a full experiment described by a spec file
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the diffusion schedule as CSV
    Schedule {
        #[arg(long, default_value_t = 96)]
        horizon: usize,
        #[arg(long, default_value_t = 1e-4)]
        beta_start: f64,
        #[arg(long, default_value_t = 0.02)]
        beta_end: f64,
    },
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("[report] cannot write {}", path.display()))
}

fn train(data: &Path, out: &Path, config: &ConfigArgs) -> Result<()> {
    let mut spec = config.spec()?;
    spec.dataset = data.to_path_buf();
    spec.validate()?;
    let schedule = spec.schedule()?;
    let series = load_csv(data).stage("load")?;
    let prepared = prepare_series(&series, &spec, None)?;
    std::fs::create_dir_all(out).with_context(|| format!("[report] cannot create {}", out.display()))?;
    let checkpoints = out.join("checkpoints");
    if spec.checkpoint_every > 0 {
        std::fs::create_dir_all(&checkpoints)
            .with_context(|| format!("[report] cannot create {}", checkpoints.display()))?;
    }
    let artifact_for = |model: &armd_core::DevolutionModel| {
        ModelArtifact::new(
            model.clone(),
            schedule.clone(),
            prepared.stats.clone(),
            prepared.channel_names.clone(),
        )
    };
    let cfg = spec.train_config(spec.train.seed);
    let (model, report) = train_with_checkpoints(
        &prepared.train_windows,
        &schedule,
        &cfg,
        spec.checkpoint_every,
        |iter, model| save_model(checkpoints.join(format!("iter{iter}.armd")), &artifact_for(model)?),
    )
    .stage("train")?;
    save_model(out.join("model.armd"), &artifact_for(&model).stage("report")?).stage("report")?;
    write_loss_curve(out.join("loss_curve.csv"), &report.loss_curve).stage("report")?;
    println!(
        "trained {} iterations on {} windows in {:.2} s, final loss {}",
        report.loss_curve.len(),
        prepared.train_windows.len(),
        report.wall_time,
        report.final_loss
    );
    println!("model written to {}", out.join("model.armd").display());
    Ok(())
}

fn forecast_cmd(model: &Path, history: &Path, out: &Path, steps: usize, noise: bool, seed: u64) -> Result<()> {
    let artifact = load_model(model).stage("load")?;
    let series = load_csv(history).stage("load")?;
    let horizon = artifact.schedule.horizon();
    if series.channel_names() != artifact.channel_names.as_slice() {
        return Err(anyhow!(
            "[forecast] history columns {:?} do not match the model's {:?}",
            series.channel_names(),
            artifact.channel_names
        ));
    }
    if series.n_timesteps() < horizon {
        return Err(anyhow!(
            "[forecast] history has {} rows but the model needs {horizon}",
            series.n_timesteps()
        ));
    }
    let recent = series.tail(horizon).stage("forecast")?;
    let normalized = artifact.stats.normalize(&recent).stage("normalize")?;
    let cfg = SamplerConfig {
        n_steps: steps,
        add_noise: noise,
        seed,
        keep_trajectory: Some(false),
        ..SamplerConfig::default()
    };
    let run = forecast(&artifact.model, &normalized, &artifact.schedule, &cfg).stage("forecast")?;
    let prediction = artifact.stats.denormalize(&run.prediction).stage("normalize")?;
    write_series_csv(out, &prediction).stage("report")?;
    println!("wrote {horizon} forecast rows to {}", out.display());
    Ok(())
}

fn evaluate_cmd(model: &Path, data: &Path, steps: Option<usize>, out: Option<&Path>, config: &ConfigArgs) -> Result<()> {
    let artifact = load_model(model).stage("load")?;
    let mut spec = config.spec()?;
    spec.dataset = data.to_path_buf();
    spec.horizon = artifact.schedule.horizon();
    spec.beta_start = artifact.schedule.beta_start();
    spec.beta_end = artifact.schedule.beta_end();
    spec.validate()?;
    let series = load_csv(data).stage("load")?;
    if series.channel_names() != artifact.channel_names.as_slice() {
        return Err(anyhow!(
            "[evaluate] dataset columns {:?} do not match the model's {:?}",
            series.channel_names(),
            artifact.channel_names
        ));
    }
    let prepared = prepare_series(&series, &spec, Some(artifact.stats.clone()))?;
    let schedule: &DiffusionSchedule = &artifact.schedule;
    let mut text = String::new();
    let n_steps = match steps {
        Some(n) => n,
        None => {
            let grid = grid_search_sampling_steps(
                &artifact.model,
                &prepared.valid_windows,
                schedule,
                &spec.sampling_grid,
                &spec.sampler(1),
            )?;
            for (n, mse, mae) in &grid.scores {
                let _ = writeln!(text, "valid.{n}.mse={mse}\nvalid.{n}.mae={mae}");
            }
            grid.best_steps
        }
    };
    let report = evaluate(&artifact.model, &prepared.test_windows, schedule, &spec.sampler(n_steps))?;
    let _ = writeln!(text, "n_steps={n_steps}\ntest_windows={}", report.n_windows);
    let _ = writeln!(text, "mse={}\nmae={}", report.mse, report.mae);
    print!("{text}");
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    Ok(())
}

fn experiment_cmd(spec_path: &Path, overrides: &[String]) -> Result<()> {
    let mut spec = ExperimentSpec::from_file(spec_path)?;
    spec.apply_overrides(overrides)?;
    let summary = run_experiment(&spec)?;
    print!("{}", summary.text);
    println!("reports written to {}", spec.output_dir.display());
    Ok(())
}

fn schedule_cmd(horizon: usize, beta_start: f64, beta_end: f64) -> Result<()> {
    let schedule = DiffusionSchedule::new(horizon, beta_start, beta_end).stage("schedule")?;
    println!("t,beta,alpha_bar");
    println!("0,,1");
    for t in 1..=horizon {
        println!("{t},{},{}", schedule.betas()[t], schedule.alpha_bar(t));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { data, out, config } => train(&data, &out, &config),
        Command::Forecast {
            model,
            history,
            out,
            steps,
            noise,
            seed,
        } => forecast_cmd(&model, &history, &out, steps, noise, seed),
        Command::Evaluate {
            model,
            data,
            steps,
            out,
            config,
        } => evaluate_cmd(&model, &data, steps, out.as_deref(), &config),
        Command::Experiment { spec, overrides } => experiment_cmd(&spec, &overrides),
        Command::Schedule {
            horizon,
            beta_start,
            beta_end,
        } => schedule_cmd(horizon, beta_start, beta_end),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Stage-tagged errors already embed their cause; only append causes not yet shown.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("armd: {msg}");
            ExitCode::FAILURE
        }
    }
}
