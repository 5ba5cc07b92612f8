//! Fold assignment and the fold access log.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Split;
use crate::error::{Error, Result};
use crate::models::ExampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Validation,
    Test,
}

/// Example indices of one train/validation/test arrangement, each sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldPlan {
    pub fn indices(&self, fold: Fold) -> &[usize] {
        match fold {
            Fold::Train => &self.train,
            Fold::Validation => &self.validation,
            Fold::Test => &self.test,
        }
    }
}

/// Assigns examples to folds. Units (single examples, or whole groups when
/// `grouped`) are shuffled by `seed` and then partitioned. Holdout and
/// train/test yield one plan, k-fold yields `k` plans whose test folds
/// partition the examples, and `none` puts everything in train.
pub fn split_examples(groups: &[String], split: &Split, grouped: bool, seed: u64) -> Result<Vec<FoldPlan>> {
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let units: Vec<Vec<usize>> = if grouped {
        let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, g) in groups.iter().enumerate() {
            by_group.entry(g.as_str()).or_default().push(i);
        }
        by_group.into_values().collect()
    } else {
        (0..groups.len()).map(|i| vec![i]).collect()
    };
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let u = units.len();
    let gather = |range: &[usize]| -> Vec<usize> {
        let mut idx: Vec<usize> = range.iter().flat_map(|&k| units[k].iter().copied()).collect();
        idx.sort_unstable();
        idx
    };
    let empty = |fold: &str| Error::SplitError(format!("{fold} fold is empty with {u} split units"));

    match *split {
        Split::Holdout { validation, test, .. } => {
            let n_test = (test * u as f64).round() as usize;
            let n_val = (validation * u as f64).round() as usize;
            if n_test + n_val >= u {
                return Err(empty("train"));
            }
            if test > 0.0 && n_test == 0 {
                return Err(empty("test"));
            }
            if validation > 0.0 && n_val == 0 {
                return Err(empty("validation"));
            }
            let n_train = u - n_test - n_val;
            Ok(vec![FoldPlan {
                train: gather(&order[..n_train]),
                validation: gather(&order[n_train..n_train + n_val]),
                test: gather(&order[n_train + n_val..]),
            }])
        }
        Split::TrainTest { train } => {
            let n_train = (train * u as f64).round() as usize;
            if n_train == 0 {
                return Err(empty("train"));
            }
            if n_train >= u {
                return Err(empty("test"));
            }
            Ok(vec![FoldPlan {
                train: gather(&order[..n_train]),
                validation: Vec::new(),
                test: gather(&order[n_train..]),
            }])
        }
        Split::Kfold { k } => {
            if k < 2 || k > u {
                return Err(Error::SplitError(format!("cannot make {k} folds from {u} split units")));
            }
            let bounds: Vec<usize> = (0..=k).map(|f| f * u / k).collect();
            Ok((0..k)
                .map(|f| {
                    let (lo, hi) = (bounds[f], bounds[f + 1]);
                    let rest: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
                    FoldPlan {
                        train: gather(&rest),
                        validation: Vec::new(),
                        test: gather(&order[lo..hi]),
                    }
                })
                .collect())
        }
        Split::None => Ok(vec![FoldPlan {
            train: gather(&order),
            validation: Vec::new(),
            test: Vec::new(),
        }]),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEntry {
    pub sequence: usize,
    pub fold_index: usize,
    pub stage: String,
    pub fold: Fold,
    pub rows: usize,
}

/// Records every read of fold data, in order.
#[derive(Debug, Default)]
pub struct AccessLog {
    entries: Mutex<Vec<AccessEntry>>,
}

/// Stage name under which final evaluation reads are logged.
pub const EVALUATE_STAGE: &str = "evaluate";

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, fold_index: usize, stage: &str, fold: Fold, rows: usize) {
        let mut entries = self.entries.lock().unwrap();
        let sequence = entries.len();
        entries.push(AccessEntry {
            sequence,
            fold_index,
            stage: stage.to_string(),
            fold,
            rows,
        });
    }

    pub fn entries(&self) -> Vec<AccessEntry> {
        self.entries.lock().unwrap().clone()
    }
}

/// Test-fold reads made by any stage other than final evaluation, plus any
/// test read logged before the evaluation of the same fold began.
pub fn test_reads_before_evaluation(entries: &[AccessEntry]) -> usize {
    let mut evaluating: BTreeMap<usize, bool> = BTreeMap::new();
    let mut count = 0;
    for e in entries {
        let started = evaluating.entry(e.fold_index).or_insert(false);
        if e.stage == EVALUATE_STAGE {
            *started = true;
        }
        if e.fold == Fold::Test && !(e.stage == EVALUATE_STAGE && *started) {
            count += 1;
        }
    }
    count
}

/// Logged access to the folds of one plan.
pub struct FoldView<'a> {
    pub data: &'a ExampleSet,
    pub plan: &'a FoldPlan,
    pub fold_index: usize,
    pub log: &'a AccessLog,
}

impl FoldView<'_> {
    pub fn read(&self, fold: Fold, stage: &str) -> ExampleSet {
        let idx = self.plan.indices(fold);
        self.log.record(self.fold_index, stage, fold, idx.len());
        self.data.subset(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{}", i / 7)).collect()
    }

    #[test]
    fn holdout_sizes() {
        let plans = split_examples(
            &ids(100),
            &Split::Holdout {
                train: 0.8,
                validation: 0.1,
                test: 0.1,
            },
            false,
            3,
        )
        .unwrap();
        let p = &plans[0];
        assert_eq!((p.train.len(), p.validation.len(), p.test.len()), (80, 10, 10));
        let all: BTreeSet<usize> = p.train.iter().chain(&p.validation).chain(&p.test).copied().collect();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn none_puts_everything_in_train() {
        let p = &split_examples(&ids(10), &Split::None, false, 0).unwrap()[0];
        assert_eq!(p.train, (0..10).collect::<Vec<_>>());
        assert!(p.test.is_empty() && p.validation.is_empty());
    }

    #[test]
    fn kfold_partitions_the_examples() {
        let plans = split_examples(&ids(100), &Split::Kfold { k: 5 }, false, 1).unwrap();
        assert_eq!(plans.len(), 5);
        let mut seen = BTreeSet::new();
        for p in &plans {
            assert_eq!(p.test.len(), 20);
            assert_eq!(p.train.len(), 80);
            for &i in &p.test {
                assert!(seen.insert(i));
                assert!(!p.train.contains(&i));
            }
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn empty_mandatory_fold_is_an_error() {
        let s = Split::Holdout {
            train: 0.9,
            validation: 0.05,
            test: 0.05,
        };
        assert!(matches!(
            split_examples(&ids(5), &s, false, 0),
            Err(Error::SplitError(_))
        ));
        assert!(matches!(
            split_examples(&ids(3), &Split::Kfold { k: 4 }, false, 0),
            Err(Error::SplitError(_))
        ));
        assert!(matches!(
            split_examples(&ids(5), &Split::TrainTest { train: 0.01 }, false, 0),
            Err(Error::SplitError(_))
        ));
    }

    #[test]
    fn access_log_flags_early_test_reads() {
        let log = AccessLog::new();
        log.record(0, "select", Fold::Train, 5);
        log.record(0, EVALUATE_STAGE, Fold::Test, 2);
        assert_eq!(test_reads_before_evaluation(&log.entries()), 0);
        log.record(1, "tune", Fold::Test, 2);
        assert_eq!(test_reads_before_evaluation(&log.entries()), 1);
    }

    proptest! {
        #[test]
        fn grouped_split_keeps_sessions_together(n in 30usize..200, seed in any::<u64>(), k in 2usize..4) {
            let g = ids(n);
            for split in [Split::Kfold { k }, Split::TrainTest { train: 0.5 }] {
                let plans = split_examples(&g, &split, true, seed).unwrap();
                for p in &plans {
                    let train: BTreeSet<&str> = p.train.iter().map(|&i| g[i].as_str()).collect();
                    let test: BTreeSet<&str> = p.test.iter().map(|&i| g[i].as_str()).collect();
                    prop_assert!(train.is_disjoint(&test));
                    prop_assert_eq!(p.train.len() + p.test.len(), n);
                }
            }
            prop_assert_eq!(
                split_examples(&g, &Split::Kfold { k }, false, seed).unwrap(),
                split_examples(&g, &Split::Kfold { k }, false, seed).unwrap()
            );
        }
    }
}
