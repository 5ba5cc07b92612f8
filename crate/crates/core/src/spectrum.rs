//! One-sided power spectral density estimates.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Power spectral density sampled at `freqs` (Hz), in units²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
}

impl Psd {
    /// Integral of the piecewise-linear interpolant of the density over
    /// `[lo, hi]`, clipped to the frequency grid.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.freqs.len().saturating_sub(1) {
            let (f0, f1) = (self.freqs[k], self.freqs[k + 1]);
            let a = lo.max(f0);
            let b = hi.min(f1);
            if b <= a {
                continue;
            }
            let (p0, p1) = (self.density[k], self.density[k + 1]);
            let at = |f: f64| p0 + (p1 - p0) * (f - f0) / (f1 - f0);
            total += (b - a) * (at(a) + at(b)) * 0.5;
        }
        total
    }
}

/// Squared DFT magnitudes of the first `n/2 + 1` bins of `x`.
fn half_spectrum_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    buf.iter().take(n / 2 + 1).map(|c| c.norm_sqr()).collect()
}

fn one_sided(power: &mut [f64], n: usize, scale: f64) {
    let last = power.len() - 1;
    for (k, p) in power.iter_mut().enumerate() {
        let double = k != 0 && !(n.is_multiple_of(2) && k == last);
        *p *= if double { 2.0 * scale } else { scale };
    }
}

/// Boxcar periodogram of the mean-removed signal.
pub fn periodogram(x: &[f64], rate: f64) -> Psd {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut density = half_spectrum_power(&centered);
    one_sided(&mut density, n, 1.0 / (rate * n as f64));
    let freqs = (0..density.len()).map(|k| k as f64 * rate / n as f64).collect();
    Psd { freqs, density }
}

pub(crate) fn hann(n: usize) -> Vec<f64> {
    // periodic Hann, as used for spectral estimation
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate: Hann-windowed, per-segment mean-removed periodograms of
/// `segment` samples advanced by `step`, averaged. Returns `None` when the
/// signal is shorter than one segment.
pub fn welch(x: &[f64], rate: f64, segment: usize, step: usize) -> Option<Psd> {
    if segment == 0 || step == 0 || x.len() < segment {
        return None;
    }
    let window = hann(segment);
    let scale = 1.0 / (rate * window.iter().map(|w| w * w).sum::<f64>());
    let count = (x.len() - segment) / step + 1;
    let mut acc = vec![0.0; segment / 2 + 1];
    let mut buf = vec![0.0; segment];
    for s in 0..count {
        let seg = &x[s * step..s * step + segment];
        let mean = seg.iter().sum::<f64>() / segment as f64;
        for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = (v - mean) * w;
        }
        for (a, p) in acc.iter_mut().zip(half_spectrum_power(&buf)) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    one_sided(&mut acc, segment, scale);
    let freqs = (0..acc.len()).map(|k| k as f64 * rate / segment as f64).collect();
    Some(Psd { freqs, density: acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodogram_satisfies_parseval() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let mean = x.iter().sum::<f64>() / 64.0;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
        let psd = periodogram(&x, 8.0);
        let df = 8.0 / 64.0;
        let total: f64 = psd.density.iter().sum::<f64>() * df;
        assert!((total - var).abs() < 1e-10, "{total} vs {var}");
    }

    #[test]
    fn integrate_handles_partial_bins() {
        let psd = Psd {
            freqs: vec![0.0, 1.0, 2.0],
            density: vec![0.0, 2.0, 2.0],
        };
        assert!((psd.integrate(0.0, 2.0) - 3.0).abs() < 1e-12);
        assert!((psd.integrate(0.5, 1.5) - 1.75).abs() < 1e-12);
        assert_eq!(psd.integrate(5.0, 6.0), 0.0);
    }

    #[test]
    fn welch_too_short() {
        assert!(welch(&[1.0; 10], 10.0, 20, 10).is_none());
    }
}
