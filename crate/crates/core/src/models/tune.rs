//! Seeded random search over a discrete hyperparameter space.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{validation_auc, ExampleSet, Kernel, LogitConfig, ModelConfig, ModelKind, RfConfig, SvmConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config_index: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: ModelConfig,
    pub score: f64,
    /// Trials in sampling order.
    pub trials: Vec<Trial>,
}

/// Samples `budget` distinct candidates from `space` (all of them when the
/// budget is larger), fits each on `train`, and returns the one with the
/// highest validation AUC. Ties go to the candidate sampled first.
pub fn tune(
    space: &[ModelConfig],
    train: &ExampleSet,
    validation: &ExampleSet,
    budget: usize,
    seed: u64,
) -> Result<TuneResult> {
    if space.is_empty() || budget == 0 {
        return Err(Error::InvalidSearchSpace);
    }
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(budget);

    let scores = order
        .par_iter()
        .map(|&i| validation_auc(&space[i], train, validation))
        .collect::<Result<Vec<f64>>>()?;
    let trials: Vec<Trial> = order
        .iter()
        .zip(&scores)
        .map(|(&config_index, &auc)| Trial { config_index, auc })
        .collect();
    let best = trials
        .iter()
        .fold(&trials[0], |b, t| if t.auc > b.auc { t } else { b })
        .clone();
    Ok(TuneResult {
        best: space[best.config_index].clone(),
        score: best.auc,
        trials,
    })
}

/// Default search space per model kind. `dim` scales the RBF widths and
/// `seed` is forwarded to randomized models.
pub fn default_space(kind: ModelKind, dim: usize, seed: u64) -> Vec<ModelConfig> {
    match kind {
        ModelKind::Rf => {
            let mut out = Vec::new();
            for n_trees in [100, 200] {
                for max_depth in [None, Some(8), Some(16)] {
                    for min_leaf in [1, 3, 5] {
                        out.push(ModelConfig::Rf(RfConfig {
                            n_trees,
                            max_depth,
                            min_leaf,
                            seed,
                            ..RfConfig::default()
                        }));
                    }
                }
            }
            out
        }
        ModelKind::Svm => {
            let d = dim.max(1) as f64;
            let mut out = Vec::new();
            for c in [0.1, 1.0, 10.0, 100.0] {
                for g in [0.25, 1.0, 4.0] {
                    out.push(ModelConfig::Svm(SvmConfig {
                        c,
                        kernel: Kernel::Rbf { gamma: Some(g / d) },
                        ..SvmConfig::default()
                    }));
                }
            }
            out
        }
        ModelKind::Logit => [0.01, 0.1, 1.0, 10.0, 100.0]
            .into_iter()
            .map(|l2| {
                ModelConfig::Logit(LogitConfig {
                    l2,
                    ..LogitConfig::default()
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tests::blobs;

    #[test]
    fn budget_one_returns_the_sample() {
        let (train, val) = (blobs(60, 3, 1.0, 1), blobs(40, 3, 1.0, 2));
        let space = default_space(ModelKind::Logit, 3, 0);
        let r = tune(&space, &train, &val, 1, 9).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.best, space[r.trials[0].config_index]);
    }

    #[test]
    fn exhaustive_search_finds_the_good_config() {
        let (train, val) = (blobs(80, 2, 2.0, 3), blobs(60, 2, 2.0, 4));
        let bad = |c: f64| {
            ModelConfig::Svm(SvmConfig {
                c,
                kernel: Kernel::Rbf { gamma: Some(1e4) },
                ..SvmConfig::default()
            })
        };
        let good = ModelConfig::Svm(SvmConfig {
            kernel: Kernel::Linear,
            ..SvmConfig::default()
        });
        let space = vec![bad(0.01), bad(1.0), good.clone(), bad(100.0)];
        let r = tune(&space, &train, &val, space.len(), 5).unwrap();
        assert_eq!(r.best, good);
    }

    #[test]
    fn deterministic_and_validated() {
        let (train, val) = (blobs(60, 3, 0.5, 5), blobs(40, 3, 0.5, 6));
        let space = default_space(ModelKind::Logit, 3, 0);
        assert_eq!(
            tune(&space, &train, &val, 3, 7).unwrap(),
            tune(&space, &train, &val, 3, 7).unwrap()
        );
        assert!(matches!(tune(&[], &train, &val, 3, 7), Err(Error::InvalidSearchSpace)));
    }
}
