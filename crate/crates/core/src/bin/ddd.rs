use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ddd_core::dataset::{generate_dataset, load_dataset, write_session, DatasetProfile, Session, SynthProfile};
use ddd_core::labeling::LabelState;
use ddd_core::models::Classifier;
use ddd_core::pipeline::{
    compare, evaluate_fold, fit_fold, fold_plans, label_windows, limit_sessions, prepare_examples, preset, roc_svg,
    run_experiment, write_roc_csv, AccessLog, ExperimentReport, FoldView, Method, PipelineConfig, Protocol,
};
use ddd_core::Error;

#[derive(Parser)]
#[command(name = "ddd", version, about = "Driver drowsiness detection from vehicle dynamics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config JSON (pipeline config, or a dataset profile for `synth`).
    /// Repeat for `compare`, where `c1` or `c2` stands for all four presets.
    /// For `preset` this is the protocol, `c1` or `c2`.
    #[arg(long, global = true)]
    config: Vec<String>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Session manifest or a directory of manifests.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Allow configurations that evaluate on training data.
    #[arg(long, global = true)]
    leakage_ack: bool,
    /// Use at most this many hours of sessions.
    #[arg(long, global = true)]
    max_hours: Option<f64>,
    /// Leave wall-clock timestamps out of written reports.
    #[arg(long, global = true)]
    no_timestamps: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a profile.
    Synth,
    /// Label windows and write labels.csv.
    Label,
    /// Extract features of labeled windows and write features.csv.
    Extract,
    /// Fit the model on the first fold's training data and write model.json.
    Train,
    /// Evaluate a saved model, or run the whole experiment without one.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run several configs on the same data and tabulate them.
    Compare,
    /// Print a preset config.
    Preset {
        #[arg(long)]
        method: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth => synth(g),
        Command::Label => label(g),
        Command::Extract => extract(g),
        Command::Train => train(g),
        Command::Evaluate { model } => evaluate(g, model.as_deref()),
        Command::Compare => run_compare(g),
        Command::Preset { method } => print_preset(g, method),
    }
}

fn read_text(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| config_error(format!("{path}: {e}")))
}

fn single_config(g: &Global) -> CliResult<&str> {
    match g.config.as_slice() {
        [one] => Ok(one),
        [] => Err(config_error("--config is required")),
        _ => Err(config_error("this command takes a single --config")),
    }
}

fn apply_overrides(g: &Global, mut config: PipelineConfig) -> CliResult<PipelineConfig> {
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if g.leakage_ack {
        config.leakage_ack = true;
    }
    if g.max_hours.is_some() {
        config.max_hours = g.max_hours;
    }
    config.validate()?;
    Ok(config)
}

fn pipeline_config(g: &Global, source: &str) -> CliResult<PipelineConfig> {
    let text = read_text(source)?;
    let config = PipelineConfig::from_json(&text).map_err(|e| config_error(format!("{source}: {e}")))?;
    apply_overrides(g, config)
}

fn out_dir(g: &Global) -> CliResult<&Path> {
    let dir = g.out.as_deref().ok_or_else(|| config_error("--out is required"))?;
    fs::create_dir_all(dir).map_err(|e| {
        Failure::from(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })?;
    Ok(dir)
}

fn sessions(g: &Global, config: &PipelineConfig) -> CliResult<Vec<Session>> {
    let path = g.data.as_deref().ok_or_else(|| config_error("--data is required"))?;
    let all = load_dataset(path)?;
    Ok(match config.max_hours {
        Some(h) => limit_sessions(&all, h, config.seed)?,
        None => all,
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    write_file(path, text + "\n")
}

fn synth(g: &Global) -> CliResult<()> {
    let source = single_config(g)?;
    let text = read_text(source)?;
    let profile = match serde_json::from_str::<DatasetProfile>(&text) {
        Ok(p) => p,
        Err(_) => DatasetProfile {
            profile: serde_json::from_str::<SynthProfile>(&text)
                .map_err(|e| config_error(format!("{source}: not a dataset or session profile: {e}")))?,
            subjects: 1,
            sessions_per_subject: 1,
        },
    };
    let dir = out_dir(g)?;
    for session in generate_dataset(&profile, g.seed.unwrap_or(0))? {
        let stem = session.frame.session_id().to_string();
        let manifest = write_session(&session, dir, &stem)?;
        println!("{}", manifest.display());
    }
    Ok(())
}

fn label_name(state: LabelState) -> &'static str {
    match state {
        LabelState::Awake => "awake",
        LabelState::Drowsy => "drowsy",
        LabelState::Unlabeled => "unlabeled",
    }
}

fn label(g: &Global) -> CliResult<()> {
    let config = pipeline_config(g, single_config(g)?)?;
    let data = sessions(g, &config)?;
    let labeled = label_windows(&config, &data)?;
    let path = out_dir(g)?.join("labels.csv");
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    w.write_record(["session_id", "window_index", "start_time", "end_time", "ratio", "label"])
        .map_err(Error::from)?;
    for r in &labeled.records {
        w.write_record([
            r.session_id.clone(),
            r.window_index.to_string(),
            r.start_time.to_string(),
            r.end_time.to_string(),
            r.ratio.map_or(String::new(), |v| v.to_string()),
            label_name(r.label).to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let count = |s| labeled.records.iter().filter(|r| r.label == s).count();
    println!(
        "{} windows: {} awake, {} drowsy, {} unlabeled -> {}",
        labeled.records.len(),
        count(LabelState::Awake),
        count(LabelState::Drowsy),
        count(LabelState::Unlabeled),
        path.display()
    );
    Ok(())
}

fn extract(g: &Global) -> CliResult<()> {
    let config = pipeline_config(g, single_config(g)?)?;
    let data = sessions(g, &config)?;
    let prepared = prepare_examples(&config, &data)?;
    let path = out_dir(g)?.join("features.csv");
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    let mut header = vec![
        "session_id".to_string(),
        "window_index".into(),
        "start_time".into(),
        "label".into(),
    ];
    header.extend(prepared.examples.feature_names.iter().cloned());
    w.write_record(&header).map_err(Error::from)?;
    for (row, &rec) in prepared.examples.rows.iter().zip(&prepared.example_records) {
        let r = &prepared.records[rec];
        let mut cells = vec![
            r.session_id.clone(),
            r.window_index.to_string(),
            r.start_time.to_string(),
            label_name(r.label).to_string(),
        ];
        cells.extend(row.iter().map(f64::to_string));
        w.write_record(&cells).map_err(Error::from)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!(
        "{} examples x {} features -> {}",
        prepared.examples.len(),
        prepared.examples.dim(),
        path.display()
    );
    Ok(())
}

fn train(g: &Global) -> CliResult<()> {
    let config = pipeline_config(g, single_config(g)?)?;
    let data = sessions(g, &config)?;
    let prepared = prepare_examples(&config, &data)?;
    let plans = fold_plans(&config, &prepared.examples)?;
    let log = AccessLog::new();
    let view = FoldView {
        data: &prepared.examples,
        plan: &plans[0],
        fold_index: 0,
        log: &log,
    };
    let fitted = fit_fold(&config, &view)?;
    let dir = out_dir(g)?;
    fitted.classifier.save(&dir.join("model.json"))?;
    write_json(&dir.join("selection.json"), &fitted.selection)?;
    println!(
        "{} model on {} training examples, {} features -> {}",
        format!("{:?}", fitted.model_config.kind()).to_lowercase(),
        plans[0].train.len(),
        fitted.selection.selected.len(),
        dir.join("model.json").display()
    );
    Ok(())
}

fn write_report_files(g: &Global, dir: &Path, report: &ExperimentReport) -> CliResult<()> {
    let r = if g.no_timestamps {
        report.without_timestamps()
    } else {
        report.clone()
    };
    write_file(&dir.join("report.json"), r.to_json()? + "\n")?;
    let mut buf = Vec::new();
    write_roc_csv(&mut buf, &report.metrics.roc)?;
    write_file(&dir.join("roc.csv"), buf)?;
    write_file(
        &dir.join("roc.svg"),
        roc_svg(&[(report.name.clone(), report.metrics.roc.clone())]),
    )
}

fn evaluate(g: &Global, model: Option<&Path>) -> CliResult<()> {
    let config = pipeline_config(g, single_config(g)?)?;
    let data = sessions(g, &config)?;
    let dir = out_dir(g)?;
    let Some(model_path) = model else {
        let report = run_experiment(&config, &data)?;
        write_report_files(g, dir, &report)?;
        print!("{}", ddd_core::pipeline::render_table(&[row_of(&report)]));
        return Ok(());
    };
    let classifier = Classifier::load(model_path)?;
    let prepared = prepare_examples(&config, &data)?;
    let plans = fold_plans(&config, &prepared.examples)?;
    let log = AccessLog::new();
    let view = FoldView {
        data: &prepared.examples,
        plan: &plans[0],
        fold_index: 0,
        log: &log,
    };
    let (metrics, _, _) = evaluate_fold(&config, &view, &classifier)?;
    write_json(&dir.join("metrics.json"), &metrics)?;
    let mut buf = Vec::new();
    write_roc_csv(&mut buf, &metrics.roc)?;
    write_file(&dir.join("roc.csv"), buf)?;
    println!(
        "AUC {:.4}  accuracy {:.2}%  precision {:.2}%  recall {:.2}%",
        metrics.auc, metrics.accuracy, metrics.precision, metrics.recall
    );
    Ok(())
}

fn row_of(r: &ExperimentReport) -> ddd_core::pipeline::ComparisonRow {
    ddd_core::pipeline::ComparisonRow {
        name: r.name.clone(),
        method: r.config.method,
        label_source: r.config.label_source,
        split: r.config.split.describe(),
        auc: r.metrics.auc,
        accuracy: r.metrics.accuracy,
        precision: r.metrics.precision,
        recall: r.metrics.recall,
    }
}

fn run_compare(g: &Global) -> CliResult<()> {
    let mut configs = Vec::new();
    for source in &g.config {
        match source.parse::<Protocol>() {
            Ok(p) => {
                for m in Method::ALL {
                    configs.push(apply_overrides(g, preset(m, p))?);
                }
            }
            Err(_) => configs.push(pipeline_config(g, source)?),
        }
    }
    let data = match g.data.as_deref() {
        Some(path) => load_dataset(path)?,
        None => return Err(config_error("--data is required")),
    };
    let report = compare(&configs, &data)?;
    let dir = out_dir(g)?;
    let r = if g.no_timestamps {
        report.without_timestamps()
    } else {
        report.clone()
    };
    write_file(&dir.join("report.json"), r.to_json()? + "\n")?;
    write_file(&dir.join("table.txt"), report.table())?;
    let mut series = Vec::new();
    for (i, rep) in report.reports.iter().enumerate() {
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &rep.metrics.roc)?;
        write_file(&dir.join(format!("roc_{i}_{}.csv", sanitize(&rep.name))), buf)?;
        series.push((rep.name.clone(), rep.metrics.roc.clone()));
    }
    write_file(&dir.join("roc.svg"), roc_svg(&series))?;
    print!("{}", report.table());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn print_preset(g: &Global, method: &str) -> CliResult<()> {
    let method: Method = method.parse()?;
    let protocol: Protocol = single_config(g)?.parse()?;
    let mut config = preset(method, protocol);
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    config.leakage_ack |= g.leakage_ack;
    let text = serde_json::to_string_pretty(&config).map_err(Error::from)? + "\n";
    match &g.out {
        Some(_) => {
            let path = out_dir(g)?.join(format!("{}.json", config.display_name()));
            write_file(&path, text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
