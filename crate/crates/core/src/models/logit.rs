//! L2-regularized logistic regression on standardized features.
//!
//! Minimizes `J(w, b) = mean log-loss + l2/(2n) ‖w‖²` (intercept not
//! penalized) by gradient descent with backtracking line search.

use serde::{Deserialize, Serialize};

use super::{Classifier, ExampleSet, ModelConfig, ModelParams, Standardizer};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop when the largest gradient component falls below this.
    pub tol: f64,
}

impl Default for LogitConfig {
    fn default() -> Self {
        LogitConfig {
            l2: 1.0,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogitModel {
    /// Probability of drowsy.
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        sigmoid(linear(&self.weights, self.intercept, &z))
    }
}

fn linear(w: &[f64], b: f64, x: &[f64]) -> f64 {
    b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
}

/// Objective and its gradient `(J, ∂J/∂w, ∂J/∂b)` on rows `x`.
pub fn logit_objective(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = linear(w, b, row);
        let t = if label { 1.0 } else { 0.0 };
        // −[t ln σ(z) + (1−t) ln(1−σ(z))] = softplus(z) − t z
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    let j = loss / n + l2 / (2.0 * n) * norm2;
    for (g, v) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 / n * v;
    }
    (j, gw, gb / n)
}

pub fn fit_logit(examples: &ExampleSet, config: &LogitConfig) -> Result<Classifier> {
    examples.require_both_classes()?;
    let standardizer = Standardizer::fit(&examples.rows);
    let x: Vec<Vec<f64>> = examples.rows.iter().map(|r| standardizer.apply(r)).collect();
    let y = &examples.labels;
    let d = examples.dim();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut j, mut gw, mut gb) = logit_objective(&x, y, &w, b, config.l2);
    let mut step = 1.0;
    for _ in 0..config.max_iter {
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < config.tol {
            break;
        }
        let g2: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let mut accepted = false;
        for _ in 0..60 {
            let nw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let nb = b - step * gb;
            let (nj, ngw, ngb) = logit_objective(&x, y, &nw, nb, config.l2);
            if nj <= j - 1e-4 * step * g2 {
                (w, b, j, gw, gb) = (nw, nb, nj, ngw, ngb);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }

    Ok(Classifier {
        feature_names: examples.feature_names.clone(),
        config: ModelConfig::Logit(config.clone()),
        params: ModelParams::Logit(LogitModel {
            standardizer,
            weights: w,
            intercept: b,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tests::blobs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(c: &Classifier) -> &LogitModel {
        match &c.params {
            ModelParams::Logit(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn symmetric_data_has_zero_intercept() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for v in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            rows.push(vec![v]);
            labels.push(v > 0.0);
            rows.push(vec![-v * 0.3]);
            labels.push(v > 0.0);
        }
        let n = rows.len();
        let set = ExampleSet::new(vec!["x".into()], rows, labels, vec!["s".into(); n]).unwrap();
        let clf = fit_logit(&set, &LogitConfig::default()).unwrap();
        assert!(model(&clf).intercept.abs() < 1e-3);
    }

    #[test]
    fn separable_data_is_learned() {
        let set = blobs(200, 3, 4.0, 21);
        let clf = fit_logit(&set, &LogitConfig::default()).unwrap();
        let correct = set
            .rows
            .iter()
            .zip(&set.labels)
            .filter(|(r, &l)| (clf.score_row(r) >= 0.5) == l)
            .count();
        assert!(correct >= 190, "{correct}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let set = blobs(50, 4, 1.0, 23);
        for _ in 0..10 {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let l2 = rng.random_range(0.0..3.0);
            let (_, gw, gb) = logit_objective(&set.rows, &set.labels, &w, b, l2);
            let h = 1e-6;
            for k in 0..4 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k] += h;
                wm[k] -= h;
                let fd = (logit_objective(&set.rows, &set.labels, &wp, b, l2).0
                    - logit_objective(&set.rows, &set.labels, &wm, b, l2).0)
                    / (2.0 * h);
                assert!((fd - gw[k]).abs() < 1e-5);
            }
            let fd = (logit_objective(&set.rows, &set.labels, &w, b + h, l2).0
                - logit_objective(&set.rows, &set.labels, &w, b - h, l2).0)
                / (2.0 * h);
            assert!((fd - gb).abs() < 1e-5);
        }
    }
}
