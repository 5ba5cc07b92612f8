//! Classifiers trained from scratch, evaluation metrics and model files.

mod forest;
mod logit;
mod metrics;
mod svm;
mod tune;

pub use forest::{fit_rf, Forest, RfConfig, Tree, TreeNode};
pub use logit::{fit_logit, logit_objective, LogitConfig, LogitModel};
pub use metrics::{auc, confusion_at, evaluate, evaluate_scores, roc_curve, Confusion, EvalMetrics, RocPoint};
pub use svm::{fit_svm, solve_dual, DualSolution, Kernel, SvmConfig, SvmModel};
pub use tune::{default_space, tune, TuneResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Labeled feature rows. `labels[i]` is true for drowsy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSet {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    /// Session id of each row, for grouped splitting.
    pub groups: Vec<String>,
}

impl ExampleSet {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
        groups: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != groups.len() {
            return Err(Error::FeatureMismatch);
        }
        for row in &rows {
            if row.len() != feature_names.len() {
                return Err(Error::FeatureMismatch);
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature(feature_names[j].clone()));
            }
        }
        Ok(ExampleSet {
            feature_names,
            rows,
            labels,
            groups,
        })
    }

    /// Builds a set from feature vectors sharing one name list.
    pub fn from_vectors(vectors: &[FeatureVector], labels: Vec<bool>, groups: Vec<String>) -> Result<Self> {
        let names = vectors.first().map(|v| v.names.clone()).unwrap_or_default();
        if vectors.iter().any(|v| v.names != names) {
            return Err(Error::FeatureMismatch);
        }
        Self::new(
            names,
            vectors.iter().map(|v| v.values.clone()).collect(),
            labels,
            groups,
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let p = self.positives();
        if p == 0 || p == self.len() {
            return Err(Error::DegenerateLabels);
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> ExampleSet {
        ExampleSet {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i].clone()).collect(),
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<ExampleSet> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|m| m == n)
                    .ok_or(Error::FeatureMismatch)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExampleSet {
            feature_names: names.to_vec(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
            labels: self.labels.clone(),
            groups: self.groups.clone(),
        })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Column `j` split into (awake, drowsy) values.
    pub fn by_class(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let mut awake = Vec::new();
        let mut drowsy = Vec::new();
        for (r, &l) in self.rows.iter().zip(&self.labels) {
            if l {
                drowsy.push(r[j]);
            } else {
                awake.push(r[j]);
            }
        }
        (awake, drowsy)
    }

    pub fn concat(&self, other: &ExampleSet) -> Result<ExampleSet> {
        if self.feature_names != other.feature_names {
            return Err(Error::FeatureMismatch);
        }
        let mut out = self.clone();
        out.rows.extend(other.rows.iter().cloned());
        out.labels.extend(&other.labels);
        out.groups.extend(other.groups.iter().cloned());
        Ok(out)
    }
}

/// Per-feature z-scoring fitted on training rows. Zero spread maps to a
/// scale of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n).sqrt();
            if *s == 0.0 || !s.is_finite() {
                *s = 1.0;
            }
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Svm,
    Logit,
}

impl ModelKind {
    /// Score cutoff used when none is configured.
    pub fn default_threshold(self) -> f64 {
        match self {
            ModelKind::Rf | ModelKind::Logit => 0.5,
            ModelKind::Svm => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Rf(RfConfig),
    Svm(SvmConfig),
    Logit(LogitConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Rf(_) => ModelKind::Rf,
            ModelConfig::Svm(_) => ModelKind::Svm,
            ModelConfig::Logit(_) => ModelKind::Logit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelParams {
    Rf(Forest),
    Svm(SvmModel),
    Logit(LogitModel),
}

/// A fitted model bound to the feature names it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub feature_names: Vec<String>,
    pub config: ModelConfig,
    pub params: ModelParams,
}

/// Version written into model files; loading any other version fails.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    kind: ModelKind,
    config: ModelConfig,
    feature_names: Vec<String>,
    params: ModelParams,
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    /// Decision score of a row already ordered like `feature_names`.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Rf(f) => f.score(row),
            ModelParams::Svm(s) => s.score(row),
            ModelParams::Logit(l) => l.score(row),
        }
    }

    pub fn score(&self, v: &FeatureVector) -> Result<f64> {
        if v.names != self.feature_names {
            return Err(Error::FeatureMismatch);
        }
        Ok(self.score_row(&v.values))
    }

    pub fn score_set(&self, set: &ExampleSet) -> Result<Vec<f64>> {
        if set.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch);
        }
        Ok(set.rows.iter().map(|r| self.score_row(r)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            config: self.config.clone(),
            feature_names: self.feature_names.clone(),
            params: self.params.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let consistent = matches!(
            (&file.config, &file.params),
            (ModelConfig::Rf(_), ModelParams::Rf(_))
                | (ModelConfig::Svm(_), ModelParams::Svm(_))
                | (ModelConfig::Logit(_), ModelParams::Logit(_))
        );
        if !consistent || file.kind != file.config.kind() {
            return Err(Error::ModelFormat("model kind does not match its parameters".into()));
        }
        Ok(Classifier {
            feature_names: file.feature_names,
            config: file.config,
            params: file.params,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Fits the model described by `config`.
pub fn fit(config: &ModelConfig, examples: &ExampleSet) -> Result<Classifier> {
    match config {
        ModelConfig::Rf(c) => fit_rf(examples, c),
        ModelConfig::Svm(c) => fit_svm(examples, c),
        ModelConfig::Logit(c) => fit_logit(examples, c),
    }
}

/// Fits on `train` and returns the AUC on `validation`.
pub fn validation_auc(config: &ModelConfig, train: &ExampleSet, validation: &ExampleSet) -> Result<f64> {
    let model = fit(config, train)?;
    let scores = model.score_set(validation)?;
    Ok(auc(&roc_curve(&scores, &validation.labels)))
}
