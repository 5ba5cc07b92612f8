//! Soft-margin SVM trained by sequential minimal optimization.
//!
//! The dual `max Σα − ½ αᵀQα` with `Q_ij = y_i y_j K(x_i, x_j)`,
//! `0 ≤ α ≤ C`, `Σ α_i y_i = 0` is solved two coordinates at a time. The
//! working pair is the maximal violating index plus the partner giving the
//! largest second-order decrease of the objective. Features are z-scored
//! with statistics stored in the model.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, ExampleSet, ModelConfig, ModelParams, Standardizer};
use crate::error::Result;

/// Training sets up to this size get a precomputed kernel matrix.
const FULL_MATRIX_LIMIT: usize = 3000;
const ROW_CACHE: usize = 1024;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Kernel {
    Linear,
    /// `exp(−γ‖a − b‖²)`; `None` picks `γ = 1 / (d · variance)` of the
    /// standardized training matrix.
    Rbf {
        gamma: Option<f64>,
    },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma.unwrap_or(1.0) * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub kernel: Kernel,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            kernel: Kernel::Rbf { gamma: None },
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub standardizer: Standardizer,
    /// Kernel with γ resolved.
    pub kernel: Kernel,
    /// Standardized support vectors.
    pub support: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl SvmModel {
    /// Signed distance-like decision value; positive means drowsy.
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        self.decision_standardized(&z)
    }

    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * self.kernel.eval(s, z))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `Σα − ½ αᵀQα` at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

enum QRows<'a, F> {
    Full(Vec<f64>, usize),
    Cached {
        kernel: &'a F,
        y: &'a [f64],
        rows: HashMap<usize, Vec<f64>>,
        order: VecDeque<usize>,
    },
}

impl<'a, F: Fn(usize, usize) -> f64 + Sync> QRows<'a, F> {
    fn new(n: usize, y: &'a [f64], kernel: &'a F) -> Self {
        if n <= FULL_MATRIX_LIMIT {
            let mut q = vec![0.0; n * n];
            q.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = y[i] * y[j] * kernel(i, j);
                }
            });
            QRows::Full(q, n)
        } else {
            QRows::Cached {
                kernel,
                y,
                rows: HashMap::new(),
                order: VecDeque::new(),
            }
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        match self {
            QRows::Full(q, n) => &q[i * *n..(i + 1) * *n],
            QRows::Cached { kernel, y, rows, order } => {
                if !rows.contains_key(&i) {
                    if order.len() >= ROW_CACHE {
                        let old = order.pop_front().unwrap();
                        rows.remove(&old);
                    }
                    let r: Vec<f64> = (0..y.len())
                        .into_par_iter()
                        .map(|j| y[i] * y[j] * kernel(i, j))
                        .collect();
                    rows.insert(i, r);
                    order.push_back(i);
                }
                &rows[&i]
            }
        }
    }
}

/// Solves the SVM dual for labels `y` (±1) and kernel `kernel(i, j)`.
pub fn solve_dual<F>(y: &[f64], kernel: F, c: f64, tol: f64, max_iter: usize) -> DualSolution
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let n = y.len();
    let qd: Vec<f64> = (0..n).map(|i| kernel(i, i)).collect();
    let mut q = QRows::new(n, y, &kernel);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // maximal violating index
        let mut gmax = f64::NEG_INFINITY;
        let mut pick_i = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let movable = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if movable && v >= gmax {
                gmax = v;
                pick_i = Some(t);
            }
        }
        let Some(i) = pick_i else {
            converged = true;
            break;
        };
        let qi = q.row(i).to_vec();

        let mut gmax2 = f64::NEG_INFINITY;
        let mut pick_j = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let movable = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !movable {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let b = gmax + v;
            if b > 0.0 {
                let a = qd[i] + qd[t] - 2.0 * y[i] * y[t] * qi[t];
                let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                if obj <= best {
                    best = obj;
                    pick_j = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol || pick_j.is_none() {
            converged = true;
            break;
        }
        let j = pick_j.unwrap();
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let qj = q.row(j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = upper(alpha[t]);
        let at_lower = lower(alpha[t]);
        if at_upper || at_lower {
            // bounds on ρ from variables stuck at 0 or C
            if (at_upper && y[t] < 0.0) || (at_lower && y[t] > 0.0) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    DualSolution {
        alpha,
        rho,
        objective,
        iterations,
        converged,
    }
}

pub fn fit_svm(examples: &ExampleSet, config: &SvmConfig) -> Result<Classifier> {
    examples.require_both_classes()?;
    let standardizer = Standardizer::fit(&examples.rows);
    let z: Vec<Vec<f64>> = examples.rows.iter().map(|r| standardizer.apply(r)).collect();
    let y: Vec<f64> = examples.labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let kernel = match config.kernel {
        Kernel::Linear => Kernel::Linear,
        Kernel::Rbf { gamma: Some(g) } => Kernel::Rbf { gamma: Some(g) },
        Kernel::Rbf { gamma: None } => {
            let d = examples.dim().max(1) as f64;
            let all: Vec<f64> = z.iter().flatten().copied().collect();
            let var = if all.is_empty() {
                0.0
            } else {
                crate::stats::variance(&all)
            };
            let gamma = if var > 0.0 { 1.0 / (d * var) } else { 1.0 / d };
            Kernel::Rbf { gamma: Some(gamma) }
        }
    };
    let max_iter = config.max_passes.max(1).saturating_mul(examples.len().max(1000));
    let sol = solve_dual(&y, |i, j| kernel.eval(&z[i], &z[j]), config.c, config.tol, max_iter);

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support.push(z[i].clone());
            coef.push(a * y[i]);
        }
    }
    Ok(Classifier {
        feature_names: examples.feature_names.clone(),
        config: ModelConfig::Svm(config.clone()),
        params: ModelParams::Svm(SvmModel {
            standardizer,
            kernel,
            support,
            coef,
            rho: sol.rho,
        }),
    })
}
