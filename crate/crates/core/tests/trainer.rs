use armd_core::evolution::{DeviationConfig, StateGenerator};
use armd_core::{
    make_window_samples, train, train_with_checkpoints, BalanceParams, DiffusionSchedule, Error, SeriesMatrix,
    TrainConfig, WindowSample,
};

fn sine_windows(horizon: usize, channels: usize, len: usize) -> Vec<WindowSample> {
    let chans = (0..channels)
        .map(|c| (0..len).map(|i| ((i as f64) * 0.3 + c as f64).sin()).collect())
        .collect();
    let s = SeriesMatrix::from_channels(chans, None).unwrap();
    make_window_samples(&s, horizon, 1).unwrap()
}

fn small_config(iterations: usize) -> TrainConfig {
    TrainConfig {
        iterations,
        batch_size: 16,
        ..TrainConfig::default()
    }
}

#[test]
fn rejects_bad_inputs() {
    let schedule = DiffusionSchedule::with_defaults(4).unwrap();
    let data = sine_windows(4, 1, 40);
    assert!(matches!(train(&[], &schedule, &small_config(1)), Err(Error::EmptyDataset)));
    assert!(train(&data, &schedule, &small_config(0)).is_err());
    let wrong = DiffusionSchedule::with_defaults(5).unwrap();
    assert!(train(&data, &wrong, &small_config(1)).is_err());
    let bad_lr = TrainConfig { learning_rate: 0.0, ..small_config(1) };
    assert!(train(&data, &schedule, &bad_lr).is_err());
}

#[test]
fn one_iteration_updates_parameters() {
    let schedule = DiffusionSchedule::with_defaults(4).unwrap();
    let data = sine_windows(4, 2, 40);
    let (model, report) = train(&data, &schedule, &small_config(1)).unwrap();
    assert_eq!(report.loss_curve.len(), 1);
    assert_eq!(report.final_loss, report.loss_curve[0]);
    // Bias starts at zero; Adam's first step moves each entry by about lr.
    assert!(model.bias().iter().any(|b| b.abs() > 5e-4));

    let mut checkpoints = Vec::new();
    train_with_checkpoints(&data, &schedule, &small_config(3), 1, |i, m| {
        checkpoints.push((i, m.clone()));
        Ok(())
    })
    .unwrap();
    assert_eq!(checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert_eq!(checkpoints[0].1, model);
    assert_ne!(checkpoints[0].1.weight(), checkpoints[1].1.weight());
}

#[test]
fn training_is_reproducible() {
    let schedule = DiffusionSchedule::with_defaults(6).unwrap();
    let data = sine_windows(6, 3, 80);
    let cfg = small_config(40);
    let (a, ra) = train(&data, &schedule, &cfg).unwrap();
    let (b, rb) = train(&data, &schedule, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        ra.loss_curve.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        rb.loss_curve.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    let other = TrainConfig { seed: 1, ..cfg };
    let (c, _) = train(&data, &schedule, &other).unwrap();
    assert_ne!(a, c);
}

#[test]
fn constant_series_is_fitted_exactly() {
    // With b = 1, c = 0 and weight rows summing to one, x0_hat reproduces a
    // constant input exactly, so the optimum loss is zero.
    let horizon = 8;
    let schedule = DiffusionSchedule::with_defaults(horizon).unwrap();
    let s = SeriesMatrix::filled(2, 40, 1.3).unwrap();
    let data = make_window_samples(&s, horizon, 1).unwrap();
    let cfg = TrainConfig {
        iterations: 500,
        deviation: DeviationConfig { enabled: false, seed: 0 },
        balance: BalanceParams { b: 1.0, c: 0.0, d: 1.0 },
        ..TrainConfig::default()
    };
    let (_, report) = train(&data, &schedule, &cfg).unwrap();
    let best = report.loss_curve.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best < 1e-3, "best loss {best:e}, final {:e}", report.final_loss);
}

#[test]
fn loss_trends_down_on_single_sample() {
    let horizon = 6;
    let schedule = DiffusionSchedule::with_defaults(horizon).unwrap();
    let data = vec![sine_windows(horizon, 2, 12).remove(0)];
    let cfg = TrainConfig {
        iterations: 100,
        batch_size: 8,
        deviation: DeviationConfig { enabled: false, seed: 0 },
        ..TrainConfig::default()
    };
    let (model, report) = train(&data, &schedule, &cfg).unwrap();
    assert!(report.loss_curve.iter().all(|l| *l >= 0.0));
    let first: f64 = report.loss_curve[..50].iter().sum::<f64>() / 50.0;
    let second: f64 = report.loss_curve[50..].iter().sum::<f64>() / 50.0;
    assert!(second < first, "{second} !< {first}");
    for t in 1..=horizon {
        let w = model.step_weight(t);
        assert!(w > 0.0 && w < 1.0);
    }
}

#[test]
fn state_generator_changes_only_states() {
    let schedule = DiffusionSchedule::with_defaults(5).unwrap();
    let data = sine_windows(5, 2, 30);
    let sliding = small_config(10);
    let interp = TrainConfig {
        state_generator: StateGenerator::Interpolation,
        ..sliding
    };
    let (a, ra) = train(&data, &schedule, &sliding).unwrap();
    let (b, rb) = train(&data, &schedule, &interp).unwrap();
    assert_eq!(a.weight().len(), b.weight().len());
    assert_eq!(a.horizon(), b.horizon());
    assert_eq!(ra.loss_curve.len(), rb.loss_curve.len());
    assert_ne!(a, b);
}

#[test]
fn deviation_changes_training() {
    let schedule = DiffusionSchedule::with_defaults(5).unwrap();
    let data = sine_windows(5, 1, 30);
    let on = small_config(5);
    let off = TrainConfig {
        deviation: DeviationConfig { enabled: false, seed: 0 },
        ..on
    };
    let (a, _) = train(&data, &schedule, &on).unwrap();
    let (b, _) = train(&data, &schedule, &off).unwrap();
    assert_ne!(a, b);
}
