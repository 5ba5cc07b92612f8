//! Multichannel time series, decimation and sliding-window segmentation.
//!
//! A [`SignalFrame`] holds one recording session: the six vehicle-dynamics
//! channels (60 Hz in the reference dataset) and up to eight EEG channels
//! (500 Hz). [`segment`] cuts a frame into fixed-length overlapping windows,
//! dropping any trailing partial window.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a recorded channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelId {
    /// Steering wheel angle (rad).
    Theta,
    /// Steering wheel rate (rad/s).
    ThetaDot,
    /// Vehicle speed (m/s).
    Vx,
    /// Longitudinal acceleration (m/s²).
    Ax,
    /// Lateral acceleration (m/s²).
    Ay,
    /// Lane offset (m).
    Delta,
    /// EEG electrode, numbered 1..=8 (µV).
    Eeg(u8),
}

impl ChannelId {
    pub const DYNAMICS: [ChannelId; 6] = [
        ChannelId::Theta,
        ChannelId::ThetaDot,
        ChannelId::Vx,
        ChannelId::Ax,
        ChannelId::Ay,
        ChannelId::Delta,
    ];

    pub const EEG: [ChannelId; 8] = [
        ChannelId::Eeg(1),
        ChannelId::Eeg(2),
        ChannelId::Eeg(3),
        ChannelId::Eeg(4),
        ChannelId::Eeg(5),
        ChannelId::Eeg(6),
        ChannelId::Eeg(7),
        ChannelId::Eeg(8),
    ];

    pub fn is_eeg(self) -> bool {
        matches!(self, ChannelId::Eeg(_))
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelId::Theta => f.write_str("theta"),
            ChannelId::ThetaDot => f.write_str("theta_dot"),
            ChannelId::Vx => f.write_str("v_x"),
            ChannelId::Ax => f.write_str("a_x"),
            ChannelId::Ay => f.write_str("a_y"),
            ChannelId::Delta => f.write_str("delta"),
            ChannelId::Eeg(n) => write!(f, "eeg_{n}"),
        }
    }
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s {
            "theta" => ChannelId::Theta,
            "theta_dot" => ChannelId::ThetaDot,
            "v_x" => ChannelId::Vx,
            "a_x" => ChannelId::Ax,
            "a_y" => ChannelId::Ay,
            "delta" => ChannelId::Delta,
            other => match other.strip_prefix("eeg_").and_then(|n| n.parse::<u8>().ok()) {
                Some(n @ 1..=8) => ChannelId::Eeg(n),
                _ => return Err(Error::SchemaError(other.to_string())),
            },
        };
        Ok(id)
    }
}

impl Serialize for ChannelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniformly sampled channel data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub rate: f64,
    pub samples: Vec<f64>,
}

/// One synchronized recording session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFrame {
    subject_id: String,
    session_id: String,
    duration: f64,
    channels: BTreeMap<ChannelId, Channel>,
}

impl SignalFrame {
    /// Builds a frame, checking that every channel is non-empty, has a
    /// positive rate and holds `round(rate × duration) ± 1` samples.
    pub fn new(
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        duration: f64,
        channels: BTreeMap<ChannelId, Channel>,
    ) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidFrame(format!("duration {duration} must be positive")));
        }
        for (id, ch) in &channels {
            if !(ch.rate.is_finite() && ch.rate > 0.0) {
                return Err(Error::InvalidFrame(format!("channel {id} has rate {}", ch.rate)));
            }
            if ch.samples.is_empty() {
                return Err(Error::InvalidFrame(format!("channel {id} is empty")));
            }
            let expected = (ch.rate * duration).round();
            if (ch.samples.len() as f64 - expected).abs() > 1.0 {
                return Err(Error::InvalidFrame(format!(
                    "channel {id} has {} samples, expected {expected} ± 1",
                    ch.samples.len()
                )));
            }
        }
        Ok(SignalFrame {
            subject_id: subject_id.into(),
            session_id: session_id.into(),
            duration,
            channels,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn channels(&self) -> &BTreeMap<ChannelId, Channel> {
        &self.channels
    }

    pub fn channel(&self, id: ChannelId) -> Result<&Channel> {
        self.channels.get(&id).ok_or(Error::ChannelNotFound(id))
    }

    pub fn has_channel(&self, id: ChannelId) -> bool {
        self.channels.contains_key(&id)
    }

    /// EEG channels present in the frame, in electrode order.
    pub fn eeg_channels(&self) -> Vec<ChannelId> {
        self.channels.keys().copied().filter(|c| c.is_eeg()).collect()
    }

    /// Copy of the frame holding only `ids`, each decimated to `rate`.
    pub fn resampled(&self, ids: &[ChannelId], rate: f64) -> Result<SignalFrame> {
        let mut channels = BTreeMap::new();
        for &id in ids {
            let ch = self.channel(id)?;
            let samples = resample(&ch.samples, ch.rate, rate)?;
            channels.insert(id, Channel { rate, samples });
        }
        SignalFrame::new(
            self.subject_id.clone(),
            self.session_id.clone(),
            self.duration,
            channels,
        )
    }
}

/// Window length, overlap ratio and sampling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Seconds.
    pub length: f64,
    /// Fraction of a window shared with its successor, in [0, 1).
    pub overlap: f64,
    /// Hz.
    pub rate: f64,
}

impl WindowSpec {
    pub fn new(length: f64, overlap: f64, rate: f64) -> Result<Self> {
        let spec = WindowSpec { length, overlap, rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidWindow(format!("rate {} must be positive", self.rate)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidWindow(format!("length {} must be positive", self.length)));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidWindow(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        if self.window_samples() == 0 {
            return Err(Error::InvalidWindow("window holds no samples".into()));
        }
        Ok(())
    }

    /// Samples per window, `round(length × rate)`.
    pub fn window_samples(&self) -> usize {
        (self.length * self.rate).round() as usize
    }

    /// Samples between consecutive window starts. Ties round down; never 0.
    pub fn stride(&self) -> usize {
        let exact = self.length * self.rate * (1.0 - self.overlap);
        ((exact - 0.5).ceil() as usize).max(1)
    }

    /// `floor((n − W) / S) + 1`, or 0 when the signal is shorter than a window.
    pub fn window_count(&self, n: usize) -> usize {
        let w = self.window_samples();
        if n < w {
            0
        } else {
            (n - w) / self.stride() + 1
        }
    }

    /// Time spans `[start, start + length)` of every full window over `n` samples.
    pub fn spans(&self, n: usize) -> Vec<WindowSpan> {
        let w = self.window_samples();
        let s = self.stride();
        (0..self.window_count(n))
            .map(|i| WindowSpan {
                index: i,
                start_sample: i * s,
                start_time: (i * s) as f64 / self.rate,
                length: w as f64 / self.rate,
            })
            .collect()
    }
}

/// Position of one window in session time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpan {
    pub index: usize,
    pub start_sample: usize,
    pub start_time: f64,
    pub length: f64,
}

impl WindowSpan {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.length
    }
}

/// One segmented slice per channel, all covering the same time span.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub index: usize,
    pub start_time: f64,
    pub length: f64,
    pub rate: f64,
    pub samples: BTreeMap<ChannelId, Vec<f64>>,
}

impl Window {
    pub fn span(&self) -> WindowSpan {
        WindowSpan {
            index: self.index,
            start_sample: (self.start_time * self.rate).round() as usize,
            start_time: self.start_time,
            length: self.length,
        }
    }

    pub fn channel(&self, id: ChannelId) -> Result<&[f64]> {
        self.samples
            .get(&id)
            .map(Vec::as_slice)
            .ok_or(Error::ChannelNotFound(id))
    }
}

/// Cuts `channels` of `frame` into windows described by `spec`.
///
/// Every requested channel must already be sampled at `spec.rate`. The sample
/// count `N` is the shortest requested channel; a signal shorter than one
/// window yields an empty sequence.
pub fn segment(frame: &SignalFrame, spec: &WindowSpec, channels: &[ChannelId]) -> Result<Vec<Window>> {
    spec.validate()?;
    let mut n = usize::MAX;
    for &id in channels {
        let ch = frame.channel(id)?;
        if (ch.rate - spec.rate).abs() > 1e-9 * spec.rate {
            return Err(Error::RateMismatch {
                channel: id,
                expected: spec.rate,
                actual: ch.rate,
            });
        }
        n = n.min(ch.samples.len());
    }
    if channels.is_empty() {
        return Ok(Vec::new());
    }
    let w = spec.window_samples();
    let windows = spec
        .spans(n)
        .into_iter()
        .map(|span| {
            let samples = channels
                .iter()
                .map(|&id| {
                    let data = &frame.channels[&id].samples;
                    (id, data[span.start_sample..span.start_sample + w].to_vec())
                })
                .collect();
            Window {
                index: span.index,
                start_time: span.start_time,
                length: span.length,
                rate: spec.rate,
                samples,
            }
        })
        .collect();
    Ok(windows)
}

/// Decimates `samples` from `from_rate` to `to_rate`.
///
/// A Blackman-windowed sinc low-pass with cutoff at 80 % of the target
/// Nyquist frequency is applied first (edge samples replicated), then the
/// filtered signal is linearly interpolated at the target instants
/// `k / to_rate`. The output holds `round(N × to_rate / from_rate)` samples.
/// The whole operation is linear and maps constants to themselves.
pub fn resample(samples: &[f64], from_rate: f64, to_rate: f64) -> Result<Vec<f64>> {
    let valid = |r: f64| r.is_finite() && r > 0.0;
    if !valid(from_rate) || !valid(to_rate) || to_rate > from_rate * (1.0 + 1e-12) {
        return Err(Error::UnsupportedResample {
            from: from_rate,
            to: to_rate,
        });
    }
    if samples.is_empty() || (to_rate - from_rate).abs() <= 1e-12 * from_rate {
        return Ok(samples.to_vec());
    }

    let ratio = from_rate / to_rate;
    let taps = lowpass_taps(0.4 / ratio, (8.0 * ratio).ceil() as usize);
    let filtered = convolve_clamped(samples, &taps);

    let n = samples.len();
    let out_len = (n as f64 / ratio).round() as usize;
    let out = (0..out_len)
        .map(|k| {
            let pos = k as f64 * ratio;
            let i0 = (pos.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            let frac = pos - i0 as f64;
            filtered[i0] + (filtered[i1] - filtered[i0]) * frac
        })
        .collect();
    Ok(out)
}

/// Symmetric low-pass FIR with `2 × half + 1` taps, unit DC gain.
/// `cutoff` is in cycles per sample.
fn lowpass_taps(cutoff: f64, half: usize) -> Vec<f64> {
    let m = (2 * half) as f64;
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let k = i as f64 - half as f64;
            let sinc = if k == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * k).sin() / (PI * k)
            };
            let phase = 2.0 * PI * i as f64 / m;
            let blackman = 0.42 - 0.5 * phase.cos() + 0.08 * (2.0 * phase).cos();
            sinc * blackman
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn convolve_clamped(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let last = x.len() as isize - 1;
    (0..x.len() as isize)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(j, &h)| {
                    let idx = (i + j as isize - half).clamp(0, last);
                    h * x[idx as usize]
                })
                .sum()
        })
        .collect()
}
