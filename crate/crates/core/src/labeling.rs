//! Ground-truth labels from EEG band power or from DRT events.
//!
//! EEG labeling estimates θ (4–8 Hz), α (8–13 Hz) and β (13–20 Hz) power per
//! window, averages it over the EEG channels, forms the ratio (θ+α)/β and
//! thresholds the ratio distribution by percentile: the lowest 60 % of
//! windows are awake, the highest 22.2 % drowsy, the rest unlabeled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EventInterval, EventKind};
use crate::error::{Error, Result};
use crate::signal::{ChannelId, SignalFrame, WindowSpan, WindowSpec};
use crate::spectrum::{welch, Psd};

pub const THETA_BAND: (f64, f64) = (4.0, 8.0);
pub const ALPHA_BAND: (f64, f64) = (8.0, 13.0);
pub const BETA_BAND: (f64, f64) = (13.0, 20.0);

/// Windows whose β power falls below this are left unlabeled.
pub const MIN_BETA_POWER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BandPowers {
    /// `(θ + α) / β`, or `None` when β is below [`MIN_BETA_POWER`].
    pub fn ratio(&self) -> Option<DrowsinessRatio> {
        (self.beta >= MIN_BETA_POWER).then(|| DrowsinessRatio {
            value: (self.theta + self.alpha) / self.beta,
            powers: *self,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrowsinessRatio {
    pub value: f64,
    pub powers: BandPowers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelState {
    Awake,
    Drowsy,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Eeg,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub state: LabelState,
    pub source: LabelSource,
}

/// Fractions of the ratio distribution labeled awake (from below) and
/// drowsy (from above).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelThresholds {
    pub awake_pct: f64,
    pub drowsy_pct: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        LabelThresholds {
            awake_pct: 0.60,
            drowsy_pct: 0.222,
        }
    }
}

impl LabelThresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.awake_pct) || !ok(self.drowsy_pct) || self.awake_pct + self.drowsy_pct > 1.0 {
            return Err(Error::Config(format!(
                "label thresholds {} / {} must be fractions summing to at most 1",
                self.awake_pct, self.drowsy_pct
            )));
        }
        Ok(())
    }
}

fn welch_1s(samples: &[f64], rate: f64) -> Result<Psd> {
    let segment = rate.round() as usize;
    if samples.len() < segment || segment < 2 {
        return Err(Error::InsufficientSamples {
            needed: segment.max(2),
            got: samples.len(),
        });
    }
    welch(samples, rate, segment, segment / 2).ok_or(Error::InsufficientSamples {
        needed: segment,
        got: samples.len(),
    })
}

fn check_band(rate: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo >= 0.0 && lo < hi && rate > 2.0 * hi) {
        return Err(Error::BandError { lo, hi, rate });
    }
    Ok(())
}

/// Welch estimate (Hann, 1 s segments, 50 % overlap) integrated over `band`.
pub fn band_power(samples: &[f64], rate: f64, band: (f64, f64)) -> Result<f64> {
    check_band(rate, band)?;
    Ok(welch_1s(samples, rate)?.integrate(band.0, band.1))
}

/// θ, α and β power from a single Welch estimate.
pub fn band_powers(samples: &[f64], rate: f64) -> Result<BandPowers> {
    for band in [THETA_BAND, ALPHA_BAND, BETA_BAND] {
        check_band(rate, band)?;
    }
    let psd = welch_1s(samples, rate)?;
    Ok(BandPowers {
        theta: psd.integrate(THETA_BAND.0, THETA_BAND.1),
        alpha: psd.integrate(ALPHA_BAND.0, ALPHA_BAND.1),
        beta: psd.integrate(BETA_BAND.0, BETA_BAND.1),
    })
}

/// Ratio per window of `spec` laid over the frame's duration.
pub fn ratio_per_window(frame: &SignalFrame, spec: &WindowSpec) -> Result<Vec<Option<DrowsinessRatio>>> {
    spec.validate()?;
    let n = (frame.duration() * spec.rate).round() as usize;
    ratios_for_spans(frame, &spec.spans(n))
}

/// Ratio per window span, with band powers averaged over all EEG channels
/// before the ratio is formed. Spans that run past the end of the EEG
/// recording, or whose β power vanishes, yield `None`.
pub fn ratios_for_spans(frame: &SignalFrame, spans: &[WindowSpan]) -> Result<Vec<Option<DrowsinessRatio>>> {
    let channels = frame.eeg_channels();
    if channels.is_empty() {
        return Err(Error::ChannelNotFound(ChannelId::Eeg(1)));
    }
    spans
        .par_iter()
        .map(|span| {
            let mut sum = BandPowers {
                theta: 0.0,
                alpha: 0.0,
                beta: 0.0,
            };
            for &id in &channels {
                let ch = frame.channel(id)?;
                let start = (span.start_time * ch.rate).round() as usize;
                let len = (span.length * ch.rate).round() as usize;
                if start + len > ch.samples.len() {
                    return Ok(None);
                }
                let p = band_powers(&ch.samples[start..start + len], ch.rate)?;
                sum.theta += p.theta;
                sum.alpha += p.alpha;
                sum.beta += p.beta;
            }
            let k = channels.len() as f64;
            let mean = BandPowers {
                theta: sum.theta / k,
                alpha: sum.alpha / k,
                beta: sum.beta / k,
            };
            Ok(mean.ratio())
        })
        .collect()
}

/// `ceil(p × n)` with a guard against representation error in `p × n`.
fn nearest_rank(p: f64, n: usize) -> usize {
    ((p * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Percentile labels over one population of finite ratios.
///
/// Nearest-rank percentiles on the sorted ratios. A ratio at or below the
/// awake threshold is awake. A ratio is drowsy when every copy of it lies in
/// the top `drowsy_pct` ranks; a tie group straddling that boundary stays
/// unlabeled. An all-equal population is entirely unlabeled.
pub fn label_by_eeg(ratios: &[f64], thresholds: &LabelThresholds) -> Result<Vec<LabelState>> {
    thresholds.validate()?;
    if ratios.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "EEG labeling needs at least 10 ratios, got {}",
            ratios.len()
        )));
    }
    if let Some(bad) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(Error::InsufficientData(format!("non-finite ratio {bad}")));
    }
    let n = ratios.len();
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Ok(vec![LabelState::Unlabeled; n]);
    }
    let k_awake = nearest_rank(thresholds.awake_pct, n);
    let k_drowsy = nearest_rank(thresholds.drowsy_pct, n);
    let awake_max = (k_awake > 0).then(|| sorted[k_awake - 1]);

    Ok(ratios
        .iter()
        .map(|&r| {
            if awake_max.is_some_and(|t| r <= t) {
                LabelState::Awake
            } else if k_drowsy > 0 && sorted.partition_point(|&s| s < r) >= n - k_drowsy {
                LabelState::Drowsy
            } else {
                LabelState::Unlabeled
            }
        })
        .collect())
}

/// Labels a set of per-window ratios, pooled or per group (for example per
/// subject). Missing ratios stay unlabeled.
pub fn label_population(
    ratios: &[Option<f64>],
    groups: Option<&[String]>,
    thresholds: &LabelThresholds,
) -> Result<Vec<LabelState>> {
    let mut out = vec![LabelState::Unlabeled; ratios.len()];
    let mut populations: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (i, r) in ratios.iter().enumerate() {
        if r.is_some() {
            let key = groups.map_or("", |g| g[i].as_str());
            populations.entry(key).or_default().push(i);
        }
    }
    for idx in populations.values() {
        let values: Vec<f64> = idx.iter().map(|&i| ratios[i].unwrap()).collect();
        for (&i, state) in idx.iter().zip(label_by_eeg(&values, thresholds)?) {
            out[i] = state;
        }
    }
    Ok(out)
}

/// Labels windows from DRT intervals.
///
/// A window overlapping a DRT interval (by a positive length) is drowsy. A
/// window overlapping none that lies within `margin` seconds before the
/// start or after the end of some DRT interval is awake. Everything else is
/// unlabeled. Negative margins act as 0.
pub fn label_by_event(windows: &[WindowSpan], events: &[EventInterval], margin: f64) -> Vec<LabelState> {
    let margin = margin.max(0.0);
    let drt: Vec<&EventInterval> = events.iter().filter(|e| e.kind == EventKind::Drt).collect();
    windows
        .iter()
        .map(|w| {
            let (ws, we) = (w.start_time, w.end_time());
            if drt.iter().any(|e| ws < e.end && e.start < we) {
                return LabelState::Drowsy;
            }
            let near = drt.iter().any(|e| {
                let before = ws >= e.start - margin && we <= e.start;
                let after = ws >= e.end && we <= e.end + margin;
                before || after
            });
            if near {
                LabelState::Awake
            } else {
                LabelState::Unlabeled
            }
        })
        .collect()
}
