use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn armd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armd")).args(args).output().expect("run armd")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../harness/tests/data/synthetic_seasonal.csv")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn schedule_table() {
    let o = armd(&["schedule", "--horizon", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,beta,alpha_bar");
    assert_eq!(lines[1], "0,,1");
    assert!(lines[2].starts_with("1,0.0001,"));
    assert_eq!(lines.len(), 6);

    let bad = armd(&["schedule", "--horizon", "0"]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("[schedule]"));
}

#[test]
fn train_forecast_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("model");
    let o = armd(&[
        "train", "--data", s(&synthetic()), "--out", s(&out),
        "--set", "horizon=16", "--set", "iterations=50", "--set", "checkpoint_every=25",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["model.armd", "loss_curve.csv", "checkpoints/iter25.armd", "checkpoints/iter50.armd"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }

    let pred = tmp.path().join("pred.csv");
    let o = armd(&["forecast", "--model", s(&out.join("model.armd")), "--history", s(&synthetic()), "--out", s(&pred), "--steps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert_eq!(text.lines().next(), Some("s0,s1,s2"));
    assert_eq!(text.lines().count(), 17);
    let again = tmp.path().join("pred2.csv");
    armd(&["forecast", "--model", s(&out.join("model.armd")), "--history", s(&synthetic()), "--out", s(&again), "--steps", "2"]);
    assert_eq!(std::fs::read(&pred).unwrap(), std::fs::read(&again).unwrap());

    let metrics = tmp.path().join("metrics.txt");
    let o = armd(&[
        "evaluate", "--model", s(&out.join("model.armd")), "--data", s(&synthetic()),
        "--set", "eval_stride=16", "--out", s(&metrics),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&metrics).unwrap();
    assert!(text.contains("n_steps=") && text.contains("\nmse=") && text.contains("valid.1.mse="));

    let o = armd(&["evaluate", "--model", s(&out.join("model.armd")), "--data", s(&synthetic()), "--steps", "3", "--set", "eval_stride=16"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n_steps=3\n"));
}

#[test]
fn experiment_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("run.spec");
    std::fs::write(
        &spec,
        format!(
            "dataset = {}\noutput_dir = out\nhorizon = 8\nn_repeats = 2\niterations = 30\nsampling_steps = 1,2\neval_stride = 4\n",
            synthetic().display()
        ),
    )
    .unwrap();
    let o = armd(&["experiment", "--spec", s(&spec), "--set", "seed=3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("repeat.0.seed=3\n") && summary.contains("repeat.1.seed=4\n"));
    assert!(stdout(&o).contains("mse="));
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (vec!["train".into(), "--data".into(), "missing.csv".into(), "--out".into(), s(tmp.path()).into()], "[load]"),
        (vec!["train".into(), "--data".into(), s(&synthetic()).into(), "--out".into(), s(tmp.path()).into(), "--set".into(), "horizn=3".into()], "[config]"),
        (vec!["forecast".into(), "--model".into(), "nope.armd".into(), "--history".into(), "h.csv".into(), "--out".into(), "o.csv".into()], "[load]"),
        (vec!["experiment".into(), "--spec".into(), "nope.spec".into()], "[config]"),
    ];
    for (args, tag) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = armd(&args);
        assert!(!o.status.success(), "{args:?} succeeded");
        let err = stderr(&o);
        assert!(err.starts_with("armd: ") && err.contains(tag), "{args:?}: {err}");
    }

    let corrupt = tmp.path().join("bad.armd");
    std::fs::write(&corrupt, b"not a model").unwrap();
    let o = armd(&["forecast", "--model", s(&corrupt), "--history", s(&synthetic()), "--out", s(&tmp.path().join("o.csv"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("[load]"));
}
