//! Random forest of Gini CART trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, ExampleSet, ModelConfig, ModelParams};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Non-constant features examined per split; `None` means ⌈√d⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 200,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        drowsy: bool,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { drowsy } => return *drowsy,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// `(feature, threshold)` of the root, if it splits.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            TreeNode::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Fraction of trees voting drowsy.
    pub fn score(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(row)).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Σ over both children of `n − (a² + b²)/n`, i.e. the sample-weighted Gini
/// impurity times the node size.
fn weighted_gini(left_pos: usize, left_n: usize, pos: usize, n: usize) -> f64 {
    let part = |p: usize, m: usize| {
        if m == 0 {
            return 0.0;
        }
        let (p, q) = (p as f64, (m - p) as f64);
        m as f64 - (p * p + q * q) / m as f64
    };
    part(left_pos, left_n) + part(pos - left_pos, n - left_n)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    mtry: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let m = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);

        let mut best: Option<(f64, usize, f64)> = None;
        let mut examined = 0;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(m);
        for f in order {
            if examined == self.mtry {
                break;
            }
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[m - 1].0 {
                continue;
            }
            examined += 1;
            let mut left_pos = 0;
            for k in 1..m {
                left_pos += pairs[k - 1].1 as usize;
                let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
                if lo == hi || k < self.min_leaf || m - k < self.min_leaf {
                    continue;
                }
                let imp = weighted_gini(left_pos, k, pos, m);
                let mut thr = lo + (hi - lo) / 2.0;
                if thr >= hi {
                    thr = lo;
                }
                let candidate = (imp, f, thr);
                let better = match best {
                    None => true,
                    Some(b) => candidate
                        .0
                        .total_cmp(&b.0)
                        .then(f.cmp(&b.1))
                        .then(thr.total_cmp(&b.2))
                        .is_lt(),
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        best.map(|(_, f, thr)| (f, thr))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let me = self.nodes.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let leaf = TreeNode::Leaf {
            drowsy: 2 * pos > idx.len(),
        };
        self.nodes.push(leaf.clone());
        let pure = pos == 0 || pos == idx.len();
        let capped = self.max_depth.is_some_and(|d| depth >= d);
        if pure || capped || idx.len() < 2 * self.min_leaf {
            return me;
        }
        let Some((feature, threshold)) = self.best_split(&idx, rng) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[me] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

fn fit_tree(set: &ExampleSet, config: &RfConfig, mtry: usize, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = set.len();
    let idx: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut b = Builder {
        x: &set.rows,
        y: &set.labels,
        mtry,
        min_leaf: config.min_leaf.max(1),
        max_depth: config.max_depth,
        nodes: Vec::new(),
    };
    b.grow(idx, 0, &mut rng);
    Tree { nodes: b.nodes }
}

/// Trains `n_trees` trees in parallel. Tree seeds are drawn in order from a
/// master generator seeded with `config.seed`, so the forest does not depend
/// on thread scheduling.
pub fn fit_rf(examples: &ExampleSet, config: &RfConfig) -> Result<Classifier> {
    examples.require_both_classes()?;
    let d = examples.dim().max(1);
    let mtry = config
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.n_trees.max(1)).map(|_| master.random()).collect();
    let trees = seeds.par_iter().map(|&s| fit_tree(examples, config, mtry, s)).collect();
    Ok(Classifier {
        feature_names: examples.feature_names.clone(),
        config: ModelConfig::Rf(config.clone()),
        params: ModelParams::Rf(Forest { trees }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tests::blobs;
    use crate::models::Classifier;

    fn forest(c: &Classifier) -> &Forest {
        match &c.params {
            ModelParams::Rf(f) => f,
            _ => unreachable!(),
        }
    }

    #[test]
    fn memorizes_consistent_data() {
        let set = blobs(120, 5, 0.3, 7);
        let config = RfConfig {
            n_trees: 10,
            bootstrap: false,
            ..RfConfig::default()
        };
        let model = fit_rf(&set, &config).unwrap();
        for (row, &y) in set.rows.iter().zip(&set.labels) {
            assert_eq!(model.score_row(row) >= 0.5, y);
        }
    }

    #[test]
    fn root_threshold_falls_in_gap() {
        let rows: Vec<Vec<f64>> = [-3.0, -2.0, -0.4, 0.7, 1.5, 2.0].iter().map(|&v| vec![v]).collect();
        let labels = vec![false, false, false, true, true, true];
        let set = ExampleSet::new(vec!["x".into()], rows, labels, vec!["s".into(); 6]).unwrap();
        let config = RfConfig {
            n_trees: 1,
            bootstrap: false,
            ..RfConfig::default()
        };
        let model = fit_rf(&set, &config).unwrap();
        let (f, t) = forest(&model).trees[0].root_split().unwrap();
        assert_eq!(f, 0);
        assert!(t > -0.4 && t < 0.7, "{t}");
    }

    #[test]
    fn votes_are_multiples_of_one_over_n() {
        let set = blobs(60, 3, 0.5, 8);
        let model = fit_rf(
            &set,
            &RfConfig {
                n_trees: 7,
                ..RfConfig::default()
            },
        )
        .unwrap();
        for row in &set.rows {
            let s = model.score_row(row) * 7.0;
            assert!((s - s.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let set = blobs(80, 4, 0.5, 9);
        let config = RfConfig {
            n_trees: 20,
            seed: 42,
            ..RfConfig::default()
        };
        assert_eq!(fit_rf(&set, &config).unwrap(), fit_rf(&set, &config).unwrap());
    }

    #[test]
    fn depth_limit_is_respected() {
        let set = blobs(100, 4, 0.2, 10);
        let config = RfConfig {
            n_trees: 5,
            max_depth: Some(2),
            ..RfConfig::default()
        };
        let model = fit_rf(&set, &config).unwrap();
        assert!(forest(&model).trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn constant_features_are_skipped() {
        // with one feature per split, a constant column must not block splitting
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let labels: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let set = ExampleSet::new(vec!["c".into(), "x".into()], rows, labels, vec!["s".into(); 20]).unwrap();
        let config = RfConfig {
            n_trees: 5,
            features_per_split: Some(1),
            bootstrap: false,
            ..RfConfig::default()
        };
        let model = fit_rf(&set, &config).unwrap();
        for t in &forest(&model).trees {
            assert_eq!(t.root_split(), Some((1, 9.5)));
        }
    }
}
