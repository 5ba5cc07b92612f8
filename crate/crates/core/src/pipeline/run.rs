//! Label, window, extract, select, tune, fit and evaluate.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EvalTarget, LabelGrouping, LabelSource, PipelineConfig, SelectionConfig, WaveletScope};
use super::split::{
    split_examples, test_reads_before_evaluation, AccessEntry, AccessLog, Fold, FoldPlan, FoldView, EVALUATE_STAGE,
};
use crate::dataset::Session;
use crate::error::{Error, Result};
use crate::features::{extract_all, FamilyId, FeatureFamily, FeatureVector};
use crate::labeling::{label_by_event, label_population, ratios_for_spans, LabelState};
use crate::models::{
    auc, default_space, evaluate_scores, fit, roc_curve, tune, Classifier, Confusion, EvalMetrics, ExampleSet,
    ModelConfig,
};
use crate::multiwavelet::{packet_decompose, prefilter, stream_energy, MultiFilterBank, DEPTH};
use crate::selection::{anova_f_topk, t_test_filter, wrapper_select, SelectionMethod, SelectionResult};
use crate::signal::{resample, segment, ChannelId, Window};

/// Share of the training fold held out for selection and tuning when the
/// split has no validation fold.
pub const INNER_VALIDATION_SHARE: f64 = 0.2;

/// One window of one session with its ratio (EEG labeling) and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub session_id: String,
    pub subject_id: String,
    pub window_index: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub ratio: Option<f64>,
    pub label: LabelState,
}

/// Windows of every session, in session order.
pub struct LabeledWindows {
    pub records: Vec<WindowRecord>,
    pub windows: Vec<Vec<Window>>,
}

/// Keeps sessions, sampled without replacement by `seed`, while their total
/// duration stays within `max_hours`. Original order is preserved.
pub fn limit_sessions(sessions: &[Session], max_hours: f64, seed: u64) -> Result<Vec<Session>> {
    let mut order: Vec<usize> = (0..sessions.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let budget = max_hours * 3600.0;
    let mut used = 0.0;
    let mut keep = Vec::new();
    for i in order {
        let d = sessions[i].frame.duration();
        if used + d <= budget {
            used += d;
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no session fits within {max_hours} hours"
        )));
    }
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| sessions[i].clone()).collect())
}

fn needed_channels(families: &[FeatureFamily]) -> Vec<ChannelId> {
    let mut out: Vec<ChannelId> = families
        .iter()
        .flat_map(|f| f.source_channels.iter().copied())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Segments every session at the window rate and labels each window.
pub fn label_windows(config: &PipelineConfig, sessions: &[Session]) -> Result<LabeledWindows> {
    if sessions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let channels = needed_channels(&config.families());
    let windows = sessions
        .par_iter()
        .map(|s| {
            let frame = s.frame.resampled(&channels, config.window.rate)?;
            segment(&frame, &config.window, &channels)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage("window"))?;

    let per_session = sessions
        .iter()
        .zip(&windows)
        .map(|(s, ws)| {
            let spans: Vec<_> = ws.iter().map(Window::span).collect();
            match config.label_source {
                LabelSource::Eeg => Ok((
                    ratios_for_spans(&s.frame, &spans)?
                        .into_iter()
                        .map(|r| r.map(|r| r.value))
                        .collect::<Vec<_>>(),
                    None,
                )),
                LabelSource::Event => Ok((
                    vec![None; spans.len()],
                    Some(label_by_event(&spans, &s.events, config.event_margin)),
                )),
            }
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage("label"))?;

    let mut records = Vec::new();
    for ((s, ws), (ratios, states)) in sessions.iter().zip(&windows).zip(&per_session) {
        for (k, w) in ws.iter().enumerate() {
            records.push(WindowRecord {
                session_id: s.frame.session_id().to_string(),
                subject_id: s.frame.subject_id().to_string(),
                window_index: w.index,
                start_time: w.start_time,
                end_time: w.start_time + w.length,
                ratio: ratios[k],
                label: states.as_ref().map_or(LabelState::Unlabeled, |st| st[k]),
            });
        }
    }
    if config.label_source == LabelSource::Eeg {
        let ratios: Vec<Option<f64>> = records.iter().map(|r| r.ratio).collect();
        let groups: Vec<String> = records.iter().map(|r| r.subject_id.clone()).collect();
        let by = match config.label_grouping {
            LabelGrouping::Pooled => None,
            LabelGrouping::PerSubject => Some(groups.as_slice()),
        };
        let states = label_population(&ratios, by, &config.thresholds).map_err(|e| e.at_stage("label"))?;
        for (r, s) in records.iter_mut().zip(states) {
            r.label = s;
        }
    }
    Ok(LabeledWindows { records, windows })
}

/// Band energies of each window taken from one packet decomposition of the
/// whole session's steering angle. Leaf coefficient `c` covers input
/// samples `[16c, 16c + 16)` and is assigned to the window holding its
/// centre.
fn session_wavelet_energies(session: &Session, family: &FeatureFamily, windows: &[&Window]) -> Result<Vec<Vec<f64>>> {
    let theta = session.frame.channel(ChannelId::Theta)?;
    let x = resample(&theta.samples, theta.rate, family.rate)?;
    let tree = packet_decompose(&prefilter(&x)?, &MultiFilterBank::ghm(), DEPTH)?;
    let span = (2usize << DEPTH) as f64 / family.rate;
    Ok(windows
        .iter()
        .map(|w| {
            let end = w.start_time + w.length;
            let first = ((w.start_time / span) - 0.5).ceil().max(0.0) as usize;
            tree.leaves
                .iter()
                .map(|leaf| {
                    let last = (((end / span) - 0.5).ceil().max(0.0) as usize).min(leaf.len());
                    if first >= last {
                        0.0
                    } else {
                        stream_energy(&leaf[first..last])
                    }
                })
                .collect()
        })
        .collect())
}

/// Labeled examples with their window records.
pub struct PreparedData {
    pub examples: ExampleSet,
    pub records: Vec<WindowRecord>,
    /// Index into `records` of every example row.
    pub example_records: Vec<usize>,
}

/// Windows, labels and features of every labeled window. Example groups are
/// session ids.
pub fn prepare_examples(config: &PipelineConfig, sessions: &[Session]) -> Result<PreparedData> {
    let labeled = label_windows(config, sessions)?;
    let families = config.families();
    let whole = config.wavelet_scope == WaveletScope::WholeSession;
    let wavelet = families.iter().find(|f| f.id == FamilyId::Wavelet8).cloned();
    let windowed: Vec<FeatureFamily> = families
        .iter()
        .filter(|f| !(whole && f.id == FamilyId::Wavelet8))
        .cloned()
        .collect();

    let mut offsets = Vec::with_capacity(sessions.len());
    let mut total = 0;
    for ws in &labeled.windows {
        offsets.push(total);
        total += ws.len();
    }
    let per_session = sessions
        .par_iter()
        .zip(&labeled.windows)
        .zip(&offsets)
        .map(|((s, ws), &off)| -> Result<Vec<(usize, FeatureVector)>> {
            let keep: Vec<usize> = (0..ws.len())
                .filter(|&k| labeled.records[off + k].label != LabelState::Unlabeled)
                .collect();
            let chosen: Vec<&Window> = keep.iter().map(|&k| &ws[k]).collect();
            let session_energies = match (&wavelet, whole) {
                (Some(f), true) => Some(session_wavelet_energies(s, f, &chosen)?),
                _ => None,
            };
            chosen
                .par_iter()
                .enumerate()
                .map(|(j, w)| {
                    let mut v = extract_all(w, &windowed)?;
                    if let Some(e) = &session_energies {
                        let at = v.names.iter().take_while(|n| n.starts_with("statistical36_")).count();
                        let names: Vec<String> = (0..e[j].len()).map(|b| format!("wavelet8_band_{b}")).collect();
                        v.names.splice(at..at, names);
                        v.values.splice(at..at, e[j].iter().copied());
                    }
                    Ok((off + keep[j], v))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage("extract"))?;

    let mut vectors = Vec::new();
    let mut example_records = Vec::new();
    for (idx, v) in per_session.into_iter().flatten() {
        example_records.push(idx);
        vectors.push(v);
    }
    if vectors.is_empty() {
        return Err(Error::InsufficientData("no labeled windows".into()).at_stage("label"));
    }
    let labels = example_records
        .iter()
        .map(|&i| labeled.records[i].label == LabelState::Drowsy)
        .collect();
    let groups = example_records
        .iter()
        .map(|&i| labeled.records[i].session_id.clone())
        .collect();
    let examples = ExampleSet::from_vectors(&vectors, labels, groups).map_err(|e| e.at_stage("extract"))?;
    Ok(PreparedData {
        examples,
        records: labeled.records,
        example_records,
    })
}

/// Stratified split of `set` into (fit, validation) by `share`.
pub fn inner_split(set: &ExampleSet, share: f64, seed: u64) -> (ExampleSet, ExampleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit_idx = Vec::new();
    let mut val_idx = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..set.len()).filter(|&i| set.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_val = if n < 2 {
            0
        } else {
            ((share * n as f64).round() as usize).clamp(1, n - 1)
        };
        val_idx.extend_from_slice(&idx[..n_val]);
        fit_idx.extend_from_slice(&idx[n_val..]);
    }
    fit_idx.sort_unstable();
    val_idx.sort_unstable();
    (set.subset(&fit_idx), set.subset(&val_idx))
}

/// Outcome of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub evaluated_size: usize,
    pub selection: SelectionResult,
    pub model: ModelConfig,
    pub tuning_auc: Option<f64>,
    pub metrics: EvalMetrics,
    #[serde(skip)]
    pub scores: Vec<f64>,
    #[serde(skip)]
    pub labels: Vec<bool>,
}

fn all_features(set: &ExampleSet) -> SelectionResult {
    SelectionResult {
        method: SelectionMethod::All,
        selected: set.feature_names.clone(),
        scores: BTreeMap::new(),
        evaluations: None,
    }
}

/// Selected features and the model fitted on a fold's training data.
#[derive(Debug, Clone)]
pub struct FittedFold {
    pub selection: SelectionResult,
    pub model_config: ModelConfig,
    pub tuning_auc: Option<f64>,
    pub classifier: Classifier,
}

/// Selection, tuning and fitting on one fold plan. Only the training and
/// validation folds are read.
pub fn fit_fold(config: &PipelineConfig, view: &FoldView) -> Result<FittedFold> {
    let seed = config.seed;
    let model_config = config.model();
    let plan = view.plan;

    let dev = |stage: &str| -> (ExampleSet, ExampleSet) {
        let train = view.read(Fold::Train, stage);
        if plan.validation.is_empty() {
            inner_split(&train, INNER_VALIDATION_SHARE, seed)
        } else {
            (train, view.read(Fold::Validation, stage))
        }
    };

    let selection = (|| match config.selection() {
        SelectionConfig::None => Ok(all_features(view.data)),
        SelectionConfig::AnovaFTopk { k } => anova_f_topk(&view.read(Fold::Train, "select"), k),
        SelectionConfig::TTest { alpha } => t_test_filter(&view.read(Fold::Train, "select"), alpha),
        SelectionConfig::Wrapper(w) => {
            let (fit_set, val_set) = dev("select");
            wrapper_select(&fit_set, &val_set, &model_config, &w)
        }
    })()
    .and_then(selection_checked)
    .map_err(|e| e.at_stage("select"))?;
    let names = &selection.selected;

    let (model_config, tuning_auc) = if config.tuning_budget > 0 {
        let r = (|| {
            let (fit_set, val_set) = dev("tune");
            let space = default_space(model_config.kind(), names.len(), seed);
            tune(
                &space,
                &fit_set.select(names)?,
                &val_set.select(names)?,
                config.tuning_budget,
                seed,
            )
        })()
        .map_err(|e| e.at_stage("tune"))?;
        (r.best, Some(r.score))
    } else {
        (model_config, None)
    };

    let classifier = view
        .read(Fold::Train, "fit")
        .select(names)
        .and_then(|train| fit(&model_config, &train))
        .map_err(|e| e.at_stage("fit"))?;
    Ok(FittedFold {
        selection,
        model_config,
        tuning_auc,
        classifier,
    })
}

/// Examples of the folds named by `target`, read under the evaluation stage.
pub fn evaluation_set(view: &FoldView, target: EvalTarget) -> Result<ExampleSet> {
    let targets: &[Fold] = match target {
        EvalTarget::Test => &[Fold::Test],
        EvalTarget::Train => &[Fold::Train],
        EvalTarget::All => &[Fold::Train, Fold::Validation, Fold::Test],
    };
    let mut set = view.data.subset(&[]);
    for &f in targets {
        set = set.concat(&view.read(f, EVALUATE_STAGE))?;
    }
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(set)
}

/// Scores `classifier` on the configured evaluation folds.
pub fn evaluate_fold(
    config: &PipelineConfig,
    view: &FoldView,
    classifier: &Classifier,
) -> Result<(EvalMetrics, Vec<f64>, Vec<bool>)> {
    let set = evaluation_set(view, config.eval_target)?.select(&classifier.feature_names)?;
    let scores = classifier.score_set(&set)?;
    let threshold = config
        .decision_threshold
        .unwrap_or_else(|| classifier.kind().default_threshold());
    let metrics = evaluate_scores(&scores, &set.labels, threshold);
    Ok((metrics, scores, set.labels))
}

/// [`fit_fold`] followed by [`evaluate_fold`].
pub fn run_fold(config: &PipelineConfig, view: &FoldView) -> Result<FoldReport> {
    let fitted = fit_fold(config, view)?;
    let (metrics, scores, labels) =
        evaluate_fold(config, view, &fitted.classifier).map_err(|e| e.at_stage("evaluate"))?;
    let plan = view.plan;
    Ok(FoldReport {
        fold_index: view.fold_index,
        train_size: plan.train.len(),
        validation_size: plan.validation.len(),
        test_size: plan.test.len(),
        evaluated_size: scores.len(),
        selection: fitted.selection,
        model: fitted.model_config,
        tuning_auc: fitted.tuning_auc,
        metrics,
        scores,
        labels,
    })
}

fn selection_checked(s: SelectionResult) -> Result<SelectionResult> {
    if s.selected.is_empty() {
        return Err(Error::InsufficientData("feature selection kept no features".into()));
    }
    Ok(s)
}

/// Summary of the examples a run used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub sessions: usize,
    pub hours: f64,
    pub windows: usize,
    pub awake: usize,
    pub drowsy: usize,
    pub unlabeled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub code_version: String,
    /// Milliseconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at_ms: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: PipelineConfig,
    pub data: DataSummary,
    /// Holdout: metrics of the single fold. K-fold: the mean of each scalar
    /// over folds, the summed confusion matrix, and the ROC of the pooled
    /// out-of-fold scores.
    pub metrics: EvalMetrics,
    /// Trapezoid AUC of `metrics.roc`, when it differs in definition from
    /// `metrics.auc` (k-fold).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled_auc: Option<f64>,
    /// Features of the single fold, or for k-fold every feature chosen in
    /// at least one fold, most frequent first.
    pub selected_features: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub access_log: Vec<AccessEntry>,
    pub test_reads_before_evaluation: usize,
    pub run_metadata: RunMetadata,
}

impl ExperimentReport {
    /// Copy without wall-clock timestamps, which is a pure function of
    /// data, config and seed.
    pub fn without_timestamps(&self) -> ExperimentReport {
        let mut r = self.clone();
        r.run_metadata.started_at_ms = None;
        r.run_metadata.finished_at_ms = None;
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

fn mean_metrics(folds: &[FoldReport]) -> (EvalMetrics, Option<f64>) {
    if folds.len() == 1 {
        return (folds[0].metrics.clone(), None);
    }
    let k = folds.len() as f64;
    let mean = |f: fn(&EvalMetrics) -> f64| folds.iter().map(|r| f(&r.metrics)).sum::<f64>() / k;
    let confusion = folds
        .iter()
        .fold(Confusion::default(), |c, r| c.add(&r.metrics.confusion));
    let scores: Vec<f64> = folds.iter().flat_map(|r| r.scores.iter().copied()).collect();
    let labels: Vec<bool> = folds.iter().flat_map(|r| r.labels.iter().copied()).collect();
    let roc = roc_curve(&scores, &labels);
    let pooled = auc(&roc);
    (
        EvalMetrics {
            accuracy: mean(|m| m.accuracy),
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            auc: mean(|m| m.auc),
            threshold: folds[0].metrics.threshold,
            confusion,
            roc,
        },
        Some(pooled),
    )
}

fn consensus_features(folds: &[FoldReport]) -> Vec<String> {
    if folds.len() == 1 {
        return folds[0].selection.selected.clone();
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in folds {
        for n in &f.selection.selected {
            *counts.entry(n.as_str()).or_default() += 1;
        }
    }
    let mut v: Vec<(&str, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().map(|(n, _)| n.to_string()).collect()
}

/// Runs one configuration end to end. Folds run one after another so the
/// access log order is deterministic.
pub fn run_experiment(config: &PipelineConfig, sessions: &[Session]) -> Result<ExperimentReport> {
    let started = now_ms();
    config.validate()?;
    let limited;
    let sessions = match config.max_hours {
        Some(h) => {
            limited = limit_sessions(sessions, h, config.seed).map_err(|e| e.at_stage("load"))?;
            &limited[..]
        }
        None => sessions,
    };
    let prepared = prepare_examples(config, sessions)?;
    let plans = fold_plans(config, &prepared.examples)?;
    let log = AccessLog::new();
    let folds = plans
        .iter()
        .enumerate()
        .map(|(i, plan)| {
            run_fold(
                config,
                &FoldView {
                    data: &prepared.examples,
                    plan,
                    fold_index: i,
                    log: &log,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (metrics, pooled_auc) = mean_metrics(&folds);
    let access_log = log.entries();
    let count = |s: LabelState| prepared.records.iter().filter(|r| r.label == s).count();
    Ok(ExperimentReport {
        name: config.display_name(),
        config: config.clone(),
        data: DataSummary {
            sessions: sessions.len(),
            hours: sessions.iter().map(|s| s.frame.duration()).sum::<f64>() / 3600.0,
            windows: prepared.records.len(),
            awake: count(LabelState::Awake),
            drowsy: count(LabelState::Drowsy),
            unlabeled: count(LabelState::Unlabeled),
        },
        metrics,
        pooled_auc,
        selected_features: consensus_features(&folds),
        test_reads_before_evaluation: test_reads_before_evaluation(&access_log),
        access_log,
        folds,
        run_metadata: RunMetadata {
            seed: config.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at_ms: Some(started),
            finished_at_ms: Some(now_ms()),
        },
    })
}

/// Fold plans of `config` over `examples`.
pub fn fold_plans(config: &PipelineConfig, examples: &ExampleSet) -> Result<Vec<FoldPlan>> {
    split_examples(&examples.groups, &config.split, config.grouped_split, config.seed).map_err(|e| e.at_stage("split"))
}
