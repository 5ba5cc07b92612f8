//! Feature selection: ANOVA-F ranking, Welch t-test filtering, and wrapper
//! search (sequential forward selection or binary particle swarm) scored by
//! validation AUC.
//!
//! Selectors only see the example sets they are handed. The pipeline passes
//! training and validation folds, never the test fold.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{validation_auc, ExampleSet, ModelConfig};
use crate::stats::{anova_f, welch_t};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    /// Every feature kept.
    All,
    AnovaFTopk,
    TTest,
    WrapperSfs,
    WrapperPso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub selected: Vec<String>,
    /// F statistic, p-value, or validation AUC depending on the method.
    pub scores: BTreeMap<String, f64>,
    /// Classifier fits spent by wrapper methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
}

/// Ranks features by two-group F statistic and keeps the top `k`. Equal
/// statistics are ordered by name.
pub fn anova_f_topk(examples: &ExampleSet, k: usize) -> Result<SelectionResult> {
    examples.require_both_classes()?;
    if k == 0 {
        return Err(Error::Config("anova top-k needs k >= 1".into()));
    }
    let scores: Vec<(String, f64)> = (0..examples.dim())
        .into_par_iter()
        .map(|j| {
            let (a, b) = examples.by_class(j);
            (examples.feature_names[j].clone(), anova_f(&a, &b))
        })
        .collect();
    let mut ranked = scores.clone();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    Ok(SelectionResult {
        method: SelectionMethod::AnovaFTopk,
        selected: ranked.into_iter().take(k).map(|(n, _)| n).collect(),
        scores: scores.into_iter().collect(),
        evaluations: None,
    })
}

/// Keeps features whose Welch t-test p-value is below `alpha`, ordered by
/// p-value then name. If none passes, the single most significant feature is
/// kept so that downstream models have an input.
pub fn t_test_filter(examples: &ExampleSet, alpha: f64) -> Result<SelectionResult> {
    examples.require_both_classes()?;
    let pos = examples.positives();
    let neg = examples.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::InsufficientData(format!(
            "t-test needs two examples per class, got {neg} awake and {pos} drowsy"
        )));
    }
    let scores: Vec<(String, f64)> = (0..examples.dim())
        .into_par_iter()
        .map(|j| {
            let (a, b) = examples.by_class(j);
            (examples.feature_names[j].clone(), welch_t(&a, &b).p)
        })
        .collect();
    let mut ranked = scores.clone();
    ranked.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    let mut selected: Vec<String> = ranked
        .iter()
        .filter(|(_, p)| *p < alpha)
        .map(|(n, _)| n.clone())
        .collect();
    if selected.is_empty() {
        selected.extend(ranked.first().map(|(n, _)| n.clone()));
    }
    Ok(SelectionResult {
        method: SelectionMethod::TTest,
        selected,
        scores: scores.into_iter().collect(),
        evaluations: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrapperStrategy {
    Sfs,
    Pso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WrapperConfig {
    pub strategy: WrapperStrategy,
    /// Maximum number of classifier fits.
    pub budget: usize,
    /// Forward selection stops when the best addition gains no more than
    /// this much validation AUC.
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for WrapperConfig {
    fn default() -> Self {
        WrapperConfig {
            strategy: WrapperStrategy::Sfs,
            budget: 200,
            min_improvement: 1e-4,
            seed: 0,
        }
    }
}

pub const SWARM_SIZE: usize = 20;
pub const INERTIA: f64 = 0.72;
pub const COGNITIVE: f64 = 1.49;
pub const SOCIAL: f64 = 1.49;
const MAX_VELOCITY: f64 = 4.0;
/// Swarm iterations without a single new subset before giving up.
const MAX_STALL: usize = 50;

struct Evaluator<'a> {
    names: Vec<String>,
    trainer: &'a ModelConfig,
    train: &'a ExampleSet,
    validation: &'a ExampleSet,
}

impl Evaluator<'_> {
    fn subset_names(&self, mask: &[bool]) -> Vec<String> {
        self.names
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn auc(&self, mask: &[bool]) -> Result<f64> {
        let names = self.subset_names(mask);
        validation_auc(
            self.trainer,
            &self.train.select(&names)?,
            &self.validation.select(&names)?,
        )
    }

    fn batch(&self, masks: &[Vec<bool>]) -> Result<Vec<f64>> {
        masks.par_iter().map(|m| self.auc(m)).collect()
    }
}

/// Searches feature subsets by fitting `trainer` on `train` and scoring AUC
/// on `validation`. Candidates are processed in name order, so the result
/// does not depend on column order.
pub fn wrapper_select(
    train: &ExampleSet,
    validation: &ExampleSet,
    trainer: &ModelConfig,
    config: &WrapperConfig,
) -> Result<SelectionResult> {
    train.require_both_classes()?;
    validation.require_both_classes()?;
    if train.feature_names != validation.feature_names {
        return Err(Error::FeatureMismatch);
    }
    let mut names = train.feature_names.clone();
    names.sort();
    let eval = Evaluator {
        names,
        trainer,
        train,
        validation,
    };
    match config.strategy {
        WrapperStrategy::Sfs => sfs(&eval, config),
        WrapperStrategy::Pso => pso(&eval, config),
    }
}

fn sfs(eval: &Evaluator, config: &WrapperConfig) -> Result<SelectionResult> {
    let d = eval.names.len();
    if config.budget < d {
        return Err(Error::BudgetTooSmall {
            budget: config.budget,
            needed: d,
        });
    }
    let mut mask = vec![false; d];
    let mut current = f64::NEG_INFINITY;
    let mut used = 0;
    let mut scores = BTreeMap::new();
    loop {
        let candidates: Vec<usize> = (0..d).filter(|&j| !mask[j]).collect();
        if candidates.is_empty() || used + candidates.len() > config.budget {
            break;
        }
        let masks: Vec<Vec<bool>> = candidates
            .iter()
            .map(|&j| {
                let mut m = mask.clone();
                m[j] = true;
                m
            })
            .collect();
        let aucs = eval.batch(&masks)?;
        used += masks.len();
        // candidates are in name order, so the first maximum wins ties
        let (best_k, best) = aucs.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &a)| if a > acc.1 { (k, a) } else { acc },
        );
        if current.is_finite() && best - current <= config.min_improvement {
            break;
        }
        let j = candidates[best_k];
        mask[j] = true;
        current = best;
        scores.insert(eval.names[j].clone(), best);
    }
    let mut selected: Vec<(String, f64)> = scores.iter().map(|(n, s)| (n.clone(), *s)).collect();
    // order of addition equals increasing AUC
    selected.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(SelectionResult {
        method: SelectionMethod::WrapperSfs,
        selected: selected.into_iter().map(|(n, _)| n).collect(),
        scores,
        evaluations: Some(used),
    })
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn pso(eval: &Evaluator, config: &WrapperConfig) -> Result<SelectionResult> {
    let d = eval.names.len();
    if d == 0 || config.budget == 0 {
        return Err(Error::BudgetTooSmall {
            budget: config.budget,
            needed: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pos: Vec<Vec<bool>> = (0..SWARM_SIZE)
        .map(|_| (0..d).map(|_| rng.random_bool(0.5)).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..SWARM_SIZE)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut pbest: Vec<(Vec<bool>, f64)> = vec![(vec![false; d], f64::NEG_INFINITY); SWARM_SIZE];
    let mut gbest: (Vec<bool>, f64) = (vec![false; d], f64::NEG_INFINITY);
    let mut stall = 0;

    loop {
        // new subsets this round, in particle order, capped by the budget
        let mut fresh: Vec<Vec<bool>> = Vec::new();
        for p in &pos {
            if p.iter().any(|&b| b) && !cache.contains_key(p) && !fresh.contains(p) {
                fresh.push(p.clone());
            }
        }
        let room = config.budget - cache.len();
        let exhausted = fresh.len() >= room;
        fresh.truncate(room);
        stall = if fresh.is_empty() { stall + 1 } else { 0 };
        for (m, a) in fresh.iter().zip(eval.batch(&fresh)?) {
            cache.insert(m.clone(), a);
        }

        for (k, p) in pos.iter().enumerate() {
            let Some(&fit) = cache.get(p) else {
                continue;
            };
            if fit > pbest[k].1 {
                pbest[k] = (p.clone(), fit);
            }
            if fit > gbest.1 {
                gbest = (p.clone(), fit);
            }
        }
        if exhausted || stall >= MAX_STALL {
            break;
        }

        for k in 0..SWARM_SIZE {
            for j in 0..d {
                let x = pos[k][j] as u8 as f64;
                let pb = pbest[k].0[j] as u8 as f64;
                let gb = gbest.0[j] as u8 as f64;
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = INERTIA * vel[k][j] + COGNITIVE * r1 * (pb - x) + SOCIAL * r2 * (gb - x);
                vel[k][j] = v.clamp(-MAX_VELOCITY, MAX_VELOCITY);
                pos[k][j] = rng.random::<f64>() < sigmoid(vel[k][j]);
            }
        }
    }

    if !gbest.1.is_finite() {
        return Err(Error::BudgetTooSmall {
            budget: config.budget,
            needed: 1,
        });
    }
    let selected = eval.subset_names(&gbest.0);
    // per feature: best AUC of any evaluated subset containing it
    let mut scores = BTreeMap::new();
    for (mask, &a) in &cache {
        for (j, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let e = scores.entry(eval.names[j].clone()).or_insert(f64::NEG_INFINITY);
            *e = f64::max(*e, a);
        }
    }
    Ok(SelectionResult {
        method: SelectionMethod::WrapperPso,
        selected,
        scores,
        evaluations: Some(cache.len()),
    })
}
