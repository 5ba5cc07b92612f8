//! Experiment configuration and the per-method presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FamilyId, FeatureFamily};
use crate::labeling::LabelThresholds;
use crate::models::{LogitConfig, ModelConfig, ModelKind, RfConfig, SvmConfig};
use crate::selection::{WrapperConfig, WrapperStrategy};
use crate::signal::WindowSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Svma,
    Svmw,
    LstmLite,
    Rf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Svma, Method::Svmw, Method::LstmLite, Method::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Svma => "svma",
            Method::Svmw => "svmw",
            Method::LstmLite => "lstm_lite",
            Method::Rf => "rf",
        }
    }

    pub fn family_ids(self) -> &'static [FamilyId] {
        match self {
            Method::Svma => &[FamilyId::Statistical36],
            Method::Svmw => &[FamilyId::Wavelet8],
            Method::LstmLite => &[FamilyId::Temporal15],
            Method::Rf => &FamilyId::ALL,
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Method::Svma | Method::Svmw => ModelKind::Svm,
            Method::LstmLite => ModelKind::Logit,
            Method::Rf => ModelKind::Rf,
        }
    }

    pub fn default_selection(self) -> SelectionConfig {
        match self {
            Method::Svma => SelectionConfig::Wrapper(WrapperConfig {
                strategy: WrapperStrategy::Sfs,
                budget: 150,
                ..WrapperConfig::default()
            }),
            Method::Svmw => SelectionConfig::None,
            Method::LstmLite => SelectionConfig::TTest { alpha: 0.05 },
            Method::Rf => SelectionConfig::AnovaFTopk { k: 20 },
        }
    }

    pub fn default_model(self, seed: u64) -> ModelConfig {
        match self.model_kind() {
            ModelKind::Svm => ModelConfig::Svm(SvmConfig::default()),
            ModelKind::Logit => ModelConfig::Logit(LogitConfig::default()),
            ModelKind::Rf => ModelConfig::Rf(RfConfig {
                seed,
                ..RfConfig::default()
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svma" => Ok(Method::Svma),
            "svmw" => Ok(Method::Svmw),
            "lstm_lite" | "lstm-lite" | "lstm" => Ok(Method::LstmLite),
            "rf" => Ok(Method::Rf),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Eeg,
    Event,
}

/// Population over which EEG ratio percentiles are taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelGrouping {
    #[default]
    Pooled,
    PerSubject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Split {
    Holdout { train: f64, validation: f64, test: f64 },
    TrainTest { train: f64 },
    Kfold { k: usize },
    None,
}

impl Split {
    pub fn describe(&self) -> String {
        match self {
            Split::Holdout {
                train,
                validation,
                test,
            } => format!("holdout {train}:{validation}:{test}"),
            Split::TrainTest { train } => format!("train_test {train}"),
            Split::Kfold { k } => format!("kfold {k}"),
            Split::None => "none".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTarget {
    Test,
    Train,
    All,
}

/// Whether wavelet energies come from each window or from one decomposition
/// of the whole session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletScope {
    #[default]
    Windowed,
    WholeSession,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SelectionConfig {
    None,
    AnovaFTopk { k: usize },
    TTest { alpha: f64 },
    Wrapper(WrapperConfig),
}

/// C1 reproduces each method's original protocol, C2 is the common clean
/// protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    C1,
    C2,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(Protocol::C1),
            "c2" => Ok(Protocol::C2),
            other => Err(Error::Config(format!("unknown protocol `{other}` (expected c1 or c2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Free-form label used in reports.
    #[serde(default)]
    pub name: Option<String>,
    pub method: Method,
    pub label_source: LabelSource,
    pub split: Split,
    pub eval_target: EvalTarget,
    pub window: WindowSpec,
    #[serde(default)]
    pub thresholds: LabelThresholds,
    #[serde(default = "default_margin")]
    pub event_margin: f64,
    #[serde(default)]
    pub seed: u64,
    /// Required for configurations that evaluate on training data.
    #[serde(default)]
    pub leakage_ack: bool,
    /// Keep every window of a session in the same fold.
    #[serde(default)]
    pub grouped_split: bool,
    #[serde(default)]
    pub label_grouping: LabelGrouping,
    #[serde(default)]
    pub wavelet_scope: WaveletScope,
    /// Method default when absent.
    #[serde(default)]
    pub selection: Option<SelectionConfig>,
    /// Method default when absent.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// Random-search trials on the validation fold; 0 keeps the model as is.
    #[serde(default)]
    pub tuning_budget: usize,
    /// Score cutoff for the confusion matrix; model default when absent.
    #[serde(default)]
    pub decision_threshold: Option<f64>,
    /// Use at most this many hours of sessions, sampled by seed.
    #[serde(default)]
    pub max_hours: Option<f64>,
}

fn window(length: f64, overlap: f64, rate: f64) -> WindowSpec {
    WindowSpec { length, overlap, rate }
}

fn default_margin() -> f64 {
    5.0
}

impl PipelineConfig {
    /// Parses a config document. Validation happens when it runs.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.method.to_string())
    }

    pub fn is_leaky(&self) -> bool {
        self.eval_target != EvalTarget::Test || self.split == Split::None
    }

    pub fn selection(&self) -> SelectionConfig {
        self.selection
            .clone()
            .unwrap_or_else(|| self.method.default_selection())
    }

    pub fn model(&self) -> ModelConfig {
        self.model
            .clone()
            .unwrap_or_else(|| self.method.default_model(self.seed))
    }

    /// Feature families of the method, each at its default rate or the
    /// window rate when that is lower.
    pub fn families(&self) -> Vec<FeatureFamily> {
        self.method
            .family_ids()
            .iter()
            .map(|&id| FeatureFamily::new(id).with_rate(id.default_rate().min(self.window.rate)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.thresholds.validate()?;
        match self.split {
            Split::Holdout {
                train,
                validation,
                test,
            } => {
                let parts = [train, validation, test];
                if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Config("holdout ratios must lie in [0, 1]".into()));
                }
                if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "holdout ratios {train} + {validation} + {test} do not sum to 1"
                    )));
                }
            }
            Split::TrainTest { train } => {
                if !(train > 0.0 && train < 1.0) {
                    return Err(Error::Config(format!("train ratio {train} must lie in (0, 1)")));
                }
            }
            Split::Kfold { k } => {
                if k < 2 {
                    return Err(Error::Config("kfold needs k >= 2".into()));
                }
            }
            Split::None => {}
        }
        if self.split == Split::None && self.eval_target == EvalTarget::Test {
            return Err(Error::Config("split none has no test fold to evaluate".into()));
        }
        if !(self.event_margin.is_finite() && self.event_margin >= 0.0) {
            return Err(Error::Config("event_margin must be a non-negative number".into()));
        }
        if let Some(h) = self.max_hours {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config("max_hours must be positive".into()));
            }
        }
        match self.selection() {
            SelectionConfig::AnovaFTopk { k: 0 } => {
                return Err(Error::Config("anova k must be positive".into()));
            }
            SelectionConfig::TTest { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::Config("t-test alpha must lie in (0, 1]".into()));
            }
            _ => {}
        }
        if self.is_leaky() && !self.leakage_ack {
            return Err(Error::LeakageNotAcknowledged);
        }
        Ok(())
    }
}

/// Preset configuration for `method` under `protocol`. Leaky presets keep
/// `leakage_ack` off, so they must be acknowledged before they run.
pub fn preset(method: Method, protocol: Protocol) -> PipelineConfig {
    let clean = PipelineConfig {
        name: Some(format!(
            "{}-{}",
            method,
            if protocol == Protocol::C1 { "c1" } else { "c2" }
        )),
        method,
        label_source: LabelSource::Eeg,
        split: Split::Holdout {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        },
        eval_target: EvalTarget::Test,
        window: window(3.0, 0.5, 60.0),
        thresholds: LabelThresholds::default(),
        event_margin: default_margin(),
        seed: 0,
        leakage_ack: false,
        grouped_split: false,
        label_grouping: LabelGrouping::Pooled,
        wavelet_scope: WaveletScope::Windowed,
        selection: None,
        model: None,
        tuning_budget: 0,
        decision_threshold: None,
        max_hours: None,
    };
    if protocol == Protocol::C2 {
        return clean;
    }
    match method {
        Method::Svma => PipelineConfig {
            split: Split::None,
            eval_target: EvalTarget::Train,
            ..clean
        },
        Method::Svmw => PipelineConfig {
            split: Split::TrainTest { train: 0.3 },
            eval_target: EvalTarget::All,
            wavelet_scope: WaveletScope::WholeSession,
            ..clean
        },
        Method::LstmLite => PipelineConfig {
            split: Split::Kfold { k: 5 },
            label_source: LabelSource::Event,
            window: window(10.0, 0.0, 10.0),
            // awake windows must fit wholly inside the margin
            event_margin: 30.0,
            ..clean
        },
        Method::Rf => clean,
    }
}
