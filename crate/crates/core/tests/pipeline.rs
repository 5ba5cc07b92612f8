use std::process::Command;

use ddd_core::dataset::{generate_dataset, write_session, DatasetProfile, Session, SynthProfile};
use ddd_core::models::{auc, Classifier};
use ddd_core::pipeline::{
    compare, fold_plans, prepare_examples, preset, read_roc_csv, run_experiment, write_roc_csv, EvalTarget, Method,
    PipelineConfig, Protocol, SelectionConfig, Split,
};
use ddd_core::signal::ChannelId;
use ddd_core::Error;

fn dataset(profile: SynthProfile, subjects: usize, seed: u64) -> Vec<Session> {
    generate_dataset(
        &DatasetProfile {
            profile,
            subjects,
            sessions_per_subject: 1,
        },
        seed,
    )
    .unwrap()
}

fn quick(method: Method, protocol: Protocol) -> PipelineConfig {
    let mut c = preset(method, protocol);
    c.leakage_ack = true;
    if method == Method::Rf {
        c.model = Some(ddd_core::models::ModelConfig::Rf(ddd_core::models::RfConfig {
            n_trees: 40,
            ..Default::default()
        }));
    }
    c
}

#[test]
fn same_inputs_same_report() {
    let data = dataset(SynthProfile::noisy(300.0), 2, 1);
    let c = quick(Method::Rf, Protocol::C2);
    let a = run_experiment(&c, &data)
        .unwrap()
        .without_timestamps()
        .to_json()
        .unwrap();
    let b = run_experiment(&c, &data)
        .unwrap()
        .without_timestamps()
        .to_json()
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn kfold_metrics_are_fold_means() {
    let data = dataset(SynthProfile::separable(300.0), 2, 2);
    let mut c = quick(Method::LstmLite, Protocol::C2);
    c.split = Split::Kfold { k: 4 };
    let r = run_experiment(&c, &data).unwrap();
    assert_eq!(r.folds.len(), 4);
    let mean = |f: fn(&ddd_core::models::EvalMetrics) -> f64| {
        r.folds.iter().map(|x| f(&x.metrics)).sum::<f64>() / r.folds.len() as f64
    };
    assert!((r.metrics.accuracy - mean(|m| m.accuracy)).abs() < 1e-12);
    assert!((r.metrics.precision - mean(|m| m.precision)).abs() < 1e-12);
    assert!((r.metrics.recall - mean(|m| m.recall)).abs() < 1e-12);
    assert!((r.metrics.auc - mean(|m| m.auc)).abs() < 1e-12);
    let evaluated: usize = r.folds.iter().map(|f| f.evaluated_size).sum();
    assert_eq!(evaluated, r.data.awake + r.data.drowsy);
    assert_eq!(r.metrics.confusion.total(), evaluated);
    assert_eq!(r.pooled_auc, Some(auc(&r.metrics.roc)));
    assert_eq!(r.test_reads_before_evaluation, 0);
}

#[test]
fn lstm_c1_runs_on_event_labels() {
    let data = dataset(SynthProfile::separable(400.0), 2, 3);
    let r = run_experiment(&quick(Method::LstmLite, Protocol::C1), &data).unwrap();
    assert_eq!(r.folds.len(), 5);
    assert!(r.data.drowsy > 0 && r.data.awake > 0);
    assert_eq!(r.test_reads_before_evaluation, 0);
}

#[test]
fn svmw_c1_uses_whole_session_energies_and_all_folds() {
    let data = dataset(SynthProfile::separable(300.0), 2, 4);
    let r = run_experiment(&quick(Method::Svmw, Protocol::C1), &data).unwrap();
    assert_eq!(r.folds[0].evaluated_size, r.data.awake + r.data.drowsy);
    assert_eq!(r.selected_features.len(), 8);
    // evaluating on everything reads the test fold, but only at evaluation
    assert_eq!(r.test_reads_before_evaluation, 0);
    assert!(r.access_log.iter().any(|e| e.fold == ddd_core::pipeline::Fold::Test));
}

#[test]
fn leaky_configs_need_acknowledgment() {
    let data = dataset(SynthProfile::separable(120.0), 1, 5);
    let mut c = preset(Method::Rf, Protocol::C2);
    c.eval_target = EvalTarget::Train;
    assert!(matches!(run_experiment(&c, &data), Err(Error::LeakageNotAcknowledged)));
    let c = preset(Method::Svma, Protocol::C1);
    assert!(matches!(run_experiment(&c, &data), Err(Error::LeakageNotAcknowledged)));
}

#[test]
fn errors_carry_their_stage() {
    let mut data = dataset(SynthProfile::separable(120.0), 1, 6);
    let frame = &data[0].frame;
    let mut channels = frame.channels().clone();
    channels.retain(|id, _| !id.is_eeg());
    data[0].frame =
        ddd_core::signal::SignalFrame::new(frame.subject_id(), frame.session_id(), frame.duration(), channels).unwrap();
    let err = run_experiment(&preset(Method::Rf, Protocol::C2), &data).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "label", .. }), "{err}");
    assert!(matches!(err.root(), Error::ChannelNotFound(ChannelId::Eeg(_))));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn compare_shares_the_split_and_exports_roc() {
    let data = dataset(SynthProfile::separable(300.0), 2, 7);
    let configs: Vec<PipelineConfig> = Method::ALL.iter().map(|&m| quick(m, Protocol::C2)).collect();
    let report = compare(&configs, &data).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.warnings.is_empty());
    let table = report.table();
    assert_eq!(table.lines().count(), 6);
    let plans: Vec<_> = configs
        .iter()
        .map(|c| fold_plans(c, &prepare_examples(c, &data).unwrap().examples).unwrap())
        .collect();
    assert!(plans.windows(2).all(|w| w[0] == w[1]));
    for r in &report.reports {
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &r.metrics.roc).unwrap();
        let back = read_roc_csv(&buf[..]).unwrap();
        assert!((auc(&back) - r.metrics.auc).abs() < 1e-9, "{}", r.name);
    }
}

#[test]
fn compare_flags_mixed_label_sources() {
    let data = dataset(SynthProfile::separable(300.0), 2, 8);
    let mut a = quick(Method::LstmLite, Protocol::C2);
    a.selection = Some(SelectionConfig::None);
    let mut b = a.clone();
    b.label_source = ddd_core::pipeline::LabelSource::Event;
    let report = compare(&[a, b], &data).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("label sources")));
    assert!(compare(&[quick(Method::Rf, Protocol::C2)], &data).is_err());
}

#[test]
fn max_hours_limits_the_sessions() {
    let data = dataset(SynthProfile::separable(300.0), 3, 9);
    let mut c = quick(Method::LstmLite, Protocol::C2);
    c.max_hours = Some(700.0 / 3600.0);
    let r = run_experiment(&c, &data).unwrap();
    assert_eq!(r.data.sessions, 2);
}

#[test]
fn cli_round_trip() {
    let bin = env!("CARGO_BIN_EXE_ddd");
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    for (i, s) in dataset(SynthProfile::separable(300.0), 2, 10).iter().enumerate() {
        write_session(s, &data_dir, &format!("s{i}")).unwrap();
    }
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap();

    let out = run(&["preset", "--method", "lstm_lite", "--config", "c2"]);
    assert!(out.status.success());
    let cfg_path = dir.path().join("lstm.json");
    std::fs::write(&cfg_path, &out.stdout).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let data = data_dir.to_str().unwrap();
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();

    for cmd in ["label", "extract", "train"] {
        let out = run(&[cmd, "--config", cfg, "--data", data, "--out", o]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let header = std::fs::read_to_string(out_dir.join("features.csv")).unwrap();
    assert!(header.starts_with("session_id,window_index,start_time,label,temporal15_theta_dot_mean"));
    let model = out_dir.join("model.json");
    Classifier::load(&model).unwrap();
    let out = run(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--config",
        cfg,
        "--data",
        data,
        "--out",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("metrics.json").exists() && out_dir.join("roc.csv").exists());

    let leaky = dir.path().join("svma1.json");
    std::fs::write(&leaky, run(&["preset", "--method", "svma", "--config", "c1"]).stdout).unwrap();
    let out = run(&[
        "evaluate",
        "--config",
        leaky.to_str().unwrap(),
        "--data",
        data,
        "--out",
        o,
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["label", "--config", cfg, "--data", "/nonexistent/ddd", "--out", o]);
    assert_eq!(out.status.code(), Some(3));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"method":"rf","surprise":true}"#).unwrap();
    let out = run(&["label", "--config", bad.to_str().unwrap(), "--data", data, "--out", o]);
    assert_eq!(out.status.code(), Some(2));

    let mut tiny = preset(Method::LstmLite, Protocol::C2);
    tiny.split = Split::Holdout {
        train: 0.98,
        validation: 0.01,
        test: 0.01,
    };
    let tiny_path = dir.path().join("tiny.json");
    std::fs::write(&tiny_path, serde_json::to_string(&tiny).unwrap()).unwrap();
    let one = dir.path().join("one");
    write_session(&dataset(SynthProfile::separable(20.0), 1, 11)[0], &one, "x").unwrap();
    let out = run(&[
        "evaluate",
        "--config",
        tiny_path.to_str().unwrap(),
        "--data",
        one.to_str().unwrap(),
        "--out",
        o,
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
