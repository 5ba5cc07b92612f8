//! Experiment orchestration: configs and presets, fold assignment with an
//! access log, end-to-end runs, and method comparison.

mod config;
mod report;
mod run;
mod split;

pub use config::{
    preset, EvalTarget, LabelGrouping, LabelSource, Method, PipelineConfig, Protocol, SelectionConfig, Split,
    WaveletScope,
};
pub use report::{
    compare, comparison_warnings, read_roc_csv, render_table, roc_svg, write_roc_csv, ComparisonReport, ComparisonRow,
};
pub use run::{
    evaluate_fold, evaluation_set, fit_fold, fold_plans, inner_split, label_windows, limit_sessions, prepare_examples,
    run_experiment, run_fold, DataSummary, ExperimentReport, FittedFold, FoldReport, LabeledWindows, PreparedData,
    RunMetadata, WindowRecord, INNER_VALIDATION_SHARE,
};
pub use split::{
    split_examples, test_reads_before_evaluation, AccessEntry, AccessLog, Fold, FoldPlan, FoldView, EVALUATE_STAGE,
};
