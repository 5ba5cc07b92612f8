//! Per-window feature families.
//!
//! * `statistical36`: 18 time- and frequency-domain statistics of θ and θ̇.
//! * `wavelet8`: GHM packet band energies of θ.
//! * `temporal15`: mean, standard deviation and AR(1) prediction-error RMS of
//!   θ̇, v_x, a_x, a_y and δ.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiwavelet;
use crate::signal::{resample, ChannelId, Window};
use crate::spectrum::periodogram;
use crate::stats::{central_moments, mean, quantile_sorted, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub window_index: usize,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        debug_assert_eq!(names.len(), values.len());
        FeatureVector {
            names,
            values,
            window_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteFeature(self.names[i].clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    Statistical36,
    Wavelet8,
    Temporal15,
}

impl FamilyId {
    pub const ALL: [FamilyId; 3] = [FamilyId::Statistical36, FamilyId::Wavelet8, FamilyId::Temporal15];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyId::Statistical36 => "statistical36",
            FamilyId::Wavelet8 => "wavelet8",
            FamilyId::Temporal15 => "temporal15",
        }
    }

    pub fn channels(self) -> &'static [ChannelId] {
        match self {
            FamilyId::Statistical36 => &STATISTICAL_CHANNELS,
            FamilyId::Wavelet8 => &[ChannelId::Theta],
            FamilyId::Temporal15 => &TEMPORAL_CHANNELS,
        }
    }

    pub fn default_rate(self) -> f64 {
        match self {
            FamilyId::Statistical36 => 60.0,
            FamilyId::Wavelet8 => 25.0,
            FamilyId::Temporal15 => 10.0,
        }
    }
}

const STATISTICAL_CHANNELS: [ChannelId; 2] = [ChannelId::Theta, ChannelId::ThetaDot];
const TEMPORAL_CHANNELS: [ChannelId; 5] = [
    ChannelId::ThetaDot,
    ChannelId::Vx,
    ChannelId::Ax,
    ChannelId::Ay,
    ChannelId::Delta,
];

/// A feature family together with the rate its input is resampled to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureFamily {
    pub id: FamilyId,
    pub source_channels: Vec<ChannelId>,
    pub rate: f64,
}

impl FeatureFamily {
    pub fn new(id: FamilyId) -> Self {
        FeatureFamily {
            id,
            source_channels: id.channels().to_vec(),
            rate: id.default_rate(),
        }
    }

    pub fn statistical36() -> Self {
        Self::new(FamilyId::Statistical36)
    }

    pub fn wavelet8() -> Self {
        Self::new(FamilyId::Wavelet8)
    }

    pub fn temporal15() -> Self {
        Self::new(FamilyId::Temporal15)
    }

    pub fn all() -> Vec<Self> {
        FamilyId::ALL.into_iter().map(Self::new).collect()
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn names(&self) -> Vec<String> {
        let prefix = self.id.as_str();
        match self.id {
            FamilyId::Statistical36 => STATISTICAL_CHANNELS
                .iter()
                .flat_map(|c| STATISTICAL_STATS.iter().map(move |s| format!("{prefix}_{c}_{s}")))
                .collect(),
            FamilyId::Wavelet8 => (0..8).map(|i| format!("{prefix}_band_{i}")).collect(),
            FamilyId::Temporal15 => TEMPORAL_CHANNELS
                .iter()
                .flat_map(|c| TEMPORAL_STATS.iter().map(move |s| format!("{prefix}_{c}_{s}")))
                .collect(),
        }
    }
}

pub const STATISTICAL_STATS: [&str; 18] = [
    "mean",
    "std",
    "var",
    "range",
    "rms",
    "energy",
    "skewness",
    "kurtosis",
    "q1",
    "median",
    "q3",
    "iqr",
    "zcr",
    "hist_entropy",
    "spectral_entropy",
    "psd_mean",
    "psd_var",
    "spectral_centroid",
];

pub const TEMPORAL_STATS: [&str; 3] = ["mean", "std", "pred_err_rms"];

pub const HISTOGRAM_BINS: usize = 16;

fn entropy_bits(weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .filter(|&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// The 18 statistics of one signal, in [`STATISTICAL_STATS`] order.
pub fn signal_statistics(x: &[f64], rate: f64) -> [f64; 18] {
    let n = x.len() as f64;
    let m = mean(x);
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let range = hi - lo;

    let (m2, m3, m4) = central_moments(x);
    let (skew, kurt) = if range == 0.0 || m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let (q1, med, q3) = (
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
    );

    let zcr = if range == 0.0 || x.len() < 2 {
        0.0
    } else {
        let crossings = x.windows(2).filter(|w| (w[0] - m) * (w[1] - m) < 0.0).count();
        crossings as f64 / (n - 1.0)
    };

    let hist_entropy = if range == 0.0 {
        0.0
    } else {
        let mut bins = [0usize; HISTOGRAM_BINS];
        for v in x {
            let b = ((v - lo) / range * HISTOGRAM_BINS as f64).floor() as usize;
            bins[b.min(HISTOGRAM_BINS - 1)] += 1;
        }
        entropy_bits(bins.iter().map(|&c| c as f64))
    };

    let psd = periodogram(x, rate);
    let power_total: f64 = psd.density.iter().sum();
    let spectral_entropy = entropy_bits(psd.density.iter().copied());
    let psd_mean = mean(&psd.density);
    let psd_var = variance(&psd.density);
    let centroid = if power_total > 0.0 {
        psd.freqs.iter().zip(&psd.density).map(|(f, p)| f * p).sum::<f64>() / power_total
    } else {
        0.0
    };

    [
        m,
        m2.sqrt(),
        m2,
        range,
        (energy / n).sqrt(),
        energy,
        skew,
        kurt,
        q1,
        med,
        q3,
        q3 - q1,
        zcr,
        hist_entropy,
        spectral_entropy,
        psd_mean,
        psd_var,
        centroid,
    ]
}

/// RMS of one-step residuals of `x[t] ≈ a·x[t−1] + b` fitted by least
/// squares within `x`. A constant predecessor sequence gives `a = 0`.
pub fn ar1_residual_rms(x: &[f64]) -> f64 {
    let prev = &x[..x.len() - 1];
    let next = &x[1..];
    let (mp, mn) = (mean(prev), mean(next));
    let sxx: f64 = prev.iter().map(|p| (p - mp) * (p - mp)).sum();
    let sxy: f64 = prev.iter().zip(next).map(|(p, q)| (p - mp) * (q - mn)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = mn - a * mp;
    let sse: f64 = prev.iter().zip(next).map(|(p, q)| (q - a * p - b).powi(2)).sum();
    (sse / prev.len() as f64).sqrt()
}

fn family_vector(family: &FeatureFamily, values: Vec<f64>, window_index: usize) -> Result<FeatureVector> {
    let mut v = FeatureVector::new(family.names(), values);
    v.window_index = window_index;
    v.ensure_finite()?;
    Ok(v)
}

/// 18 statistics of θ followed by the same 18 of θ̇.
pub fn statistical36(window: &Window) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(36);
    for id in STATISTICAL_CHANNELS {
        let x = window.channel(id)?;
        if x.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        values.extend(signal_statistics(x, window.rate));
    }
    family_vector(&FeatureFamily::statistical36(), values, window.index)
}

/// GHM band energies of θ.
pub fn wavelet8(window: &Window) -> Result<FeatureVector> {
    let mut v = multiwavelet::wavelet8(window.channel(ChannelId::Theta)?)?;
    v.window_index = window.index;
    v.ensure_finite()?;
    Ok(v)
}

/// Mean, standard deviation and AR(1) residual RMS of each temporal channel.
pub fn temporal15(window: &Window) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(15);
    for id in TEMPORAL_CHANNELS {
        let x = window.channel(id)?;
        if x.len() < 3 {
            return Err(Error::InsufficientSamples {
                needed: 3,
                got: x.len(),
            });
        }
        values.extend([mean(x), variance(x).sqrt(), ar1_residual_rms(x)]);
    }
    family_vector(&FeatureFamily::temporal15(), values, window.index)
}

/// The sub-window a family sees: its channels, resampled to its rate.
fn family_window(window: &Window, family: &FeatureFamily) -> Result<Window> {
    let mut samples = std::collections::BTreeMap::new();
    for &id in &family.source_channels {
        let x = window.channel(id)?;
        samples.insert(id, resample(x, window.rate, family.rate)?);
    }
    Ok(Window {
        index: window.index,
        start_time: window.start_time,
        length: window.length,
        rate: family.rate,
        samples,
    })
}

/// Name list produced by [`extract_all`] for `families`.
pub fn feature_names(families: &[FeatureFamily]) -> Vec<String> {
    ordered(families).iter().flat_map(|f| f.names()).collect()
}

fn ordered(families: &[FeatureFamily]) -> Vec<&FeatureFamily> {
    let mut out: Vec<&FeatureFamily> = Vec::new();
    for id in FamilyId::ALL {
        if let Some(f) = families.iter().find(|f| f.id == id) {
            out.push(f);
        }
    }
    out
}

/// Concatenates the requested families in the order statistical36,
/// wavelet8, temporal15. Each family's channels are resampled from the
/// window rate to the family rate first.
pub fn extract_all(window: &Window, families: &[FeatureFamily]) -> Result<FeatureVector> {
    let mut out = FeatureVector {
        names: Vec::new(),
        values: Vec::new(),
        window_index: window.index,
    };
    for family in ordered(families) {
        let sub = family_window(window, family)?;
        let part = match family.id {
            FamilyId::Statistical36 => statistical36(&sub)?,
            FamilyId::Wavelet8 => wavelet8(&sub)?,
            FamilyId::Temporal15 => temporal15(&sub)?,
        };
        out.names.extend(part.names);
        out.values.extend(part.values);
    }
    Ok(out)
}

/// [`extract_all`] over many windows in parallel, preserving order.
pub fn extract_windows(windows: &[Window], families: &[FeatureFamily]) -> Result<Vec<FeatureVector>> {
    windows.par_iter().map(|w| extract_all(w, families)).collect()
}

/// Writes vectors as CSV: `window_index` then one column per feature name.
pub fn write_csv<W: Write>(out: W, vectors: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = vectors.first() {
        let mut header = vec!["window_index".to_string()];
        header.extend(first.names.iter().cloned());
        w.write_record(&header)?;
    }
    for v in vectors {
        if vectors[0].names != v.names {
            return Err(Error::FeatureMismatch);
        }
        let mut row = vec![v.window_index.to_string()];
        row.extend(v.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
