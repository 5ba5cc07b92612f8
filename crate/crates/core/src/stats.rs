//! Descriptive statistics and two-group tests.

use statrs::function::beta::beta_reg;

/// Arithmetic mean, accumulated relative to the first sample so that a
/// constant input returns that constant exactly.
pub fn mean(x: &[f64]) -> f64 {
    let x0 = x[0];
    x0 + x.iter().map(|v| v - x0).sum::<f64>() / x.len() as f64
}

/// Population variance (divides by n).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (divides by n − 1).
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Linear-interpolation quantile of already sorted data; `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Central moments 2, 3 and 4 about the mean.
pub fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Welch's unequal-variance t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch t-test of `a` against `b`. Both need at least two samples.
///
/// When both groups have zero variance, the test degenerates: equal means
/// give t = 0, p = 1; different means give an infinite t and p = 0.
pub fn welch_t(a: &[f64], b: &[f64]) -> WelchT {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (qa, qb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let se2 = qa + qb;
    if se2 == 0.0 {
        return if ma == mb {
            WelchT {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
            }
        } else {
            WelchT {
                t: (ma - mb).signum() * f64::INFINITY,
                df: na + nb - 2.0,
                p: 0.0,
            }
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    WelchT {
        t,
        df,
        p: t_two_sided_p(t, df),
    }
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom,
/// through the regularized incomplete beta function.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// One-way ANOVA F statistic for two groups. A zero within-group sum of
/// squares yields `f64::MAX` when the group means differ and 0 otherwise.
pub fn anova_f(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let grand = (ma * na + mb * nb) / (na + nb);
    let ssb = na * (ma - grand).powi(2) + nb * (mb - grand).powi(2);
    let ssw: f64 = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
    if ssw == 0.0 {
        return if ssb > 0.0 { f64::MAX } else { 0.0 };
    }
    ssb / (ssw / (na + nb - 2.0))
}
