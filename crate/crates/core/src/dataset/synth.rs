//! Synthetic driving sessions with scheduled drowsy episodes.
//!
//! During an episode the steering corrections slow down and the angle drifts
//! further, the lane offset wanders more, and EEG θ and α power rise by
//! `eeg_ratio_factor` relative to β. Everything is a pure function of the
//! profile and the seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{merge_events, EventInterval, EventKind, Session, DYNAMICS_RATE, EEG_RATE};
use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelId, SignalFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: f64,
    pub end: f64,
}

impl Episode {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Detection-response-task stimulus schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrtSchedule {
    /// Periods with DRT active; empty means the whole session.
    #[serde(default)]
    pub blocks: Vec<Episode>,
    #[serde(default = "default_period_min")]
    pub period_min: f64,
    #[serde(default = "default_period_max")]
    pub period_max: f64,
}

fn default_period_min() -> f64 {
    6.0
}
fn default_period_max() -> f64 {
    10.0
}

impl DrtSchedule {
    /// DRT active for 60 s out of every 120 s, starting at 30 s, so the
    /// session mixes scenarios with and without the task.
    pub fn alternating(duration: f64) -> Self {
        let mut blocks = Vec::new();
        let mut start = 30.0;
        while start < duration {
            blocks.push(Episode {
                start,
                end: (start + 60.0).min(duration),
            });
            start += 120.0;
        }
        DrtSchedule {
            blocks,
            ..DrtSchedule::default()
        }
    }
}

impl Default for DrtSchedule {
    fn default() -> Self {
        DrtSchedule {
            blocks: Vec::new(),
            period_min: default_period_min(),
            period_max: default_period_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthProfile {
    #[serde(default = "default_subject")]
    pub subject_id: String,
    #[serde(default = "default_session")]
    pub session_id: String,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub drowsy_episodes: Vec<Episode>,
    /// Multiplier of the EEG (θ+α)/β ratio inside episodes; at least 2.
    #[serde(default = "default_factor")]
    pub eeg_ratio_factor: f64,
    /// 0 leaves vehicle dynamics unaffected by episodes, 1 applies the full change.
    #[serde(default = "default_one")]
    pub dynamics_effect: f64,
    /// Steering sensor noise (rad).
    #[serde(default = "default_steering_noise")]
    pub steering_noise: f64,
    /// Standard deviation of a slow log-gain fluctuation of steering
    /// activity that is unrelated to drowsiness.
    #[serde(default)]
    pub nuisance_gain: f64,
    /// Lane offset standard deviation while awake (m).
    #[serde(default = "default_lane_noise")]
    pub lane_noise: f64,
    /// Log-normal spread of the per-session baseline EEG ratio.
    #[serde(default)]
    pub subject_ratio_spread: f64,
    #[serde(default = "default_true")]
    pub include_eeg: bool,
    #[serde(default)]
    pub drt: Option<DrtSchedule>,
}

fn default_subject() -> String {
    "synth".into()
}
fn default_session() -> String {
    "synth-1".into()
}
fn default_factor() -> f64 {
    3.0
}
fn default_one() -> f64 {
    1.0
}
fn default_steering_noise() -> f64 {
    0.001
}
fn default_lane_noise() -> f64 {
    0.08
}
fn default_true() -> bool {
    true
}

impl SynthProfile {
    /// Awake-only session of `duration` seconds.
    pub fn awake(duration: f64) -> Self {
        SynthProfile {
            subject_id: default_subject(),
            session_id: default_session(),
            duration,
            drowsy_episodes: Vec::new(),
            eeg_ratio_factor: default_factor(),
            dynamics_effect: 1.0,
            steering_noise: default_steering_noise(),
            nuisance_gain: 0.0,
            lane_noise: default_lane_noise(),
            subject_ratio_spread: 0.0,
            include_eeg: true,
            drt: Some(DrtSchedule::alternating(duration)),
        }
    }

    /// Two drowsy episodes covering 30 % of the session, with a strong
    /// dynamics signature: classes are close to perfectly separable.
    pub fn separable(duration: f64) -> Self {
        SynthProfile {
            drowsy_episodes: vec![
                Episode {
                    start: 0.35 * duration,
                    end: 0.50 * duration,
                },
                Episode {
                    start: 0.70 * duration,
                    end: 0.85 * duration,
                },
            ],
            eeg_ratio_factor: 4.0,
            ..SynthProfile::awake(duration)
        }
    }

    /// Same schedule as [`SynthProfile::separable`] but the dynamics carry
    /// only a weak drowsiness signature buried under nuisance variation.
    pub fn noisy(duration: f64) -> Self {
        SynthProfile {
            dynamics_effect: 0.15,
            nuisance_gain: 0.6,
            steering_noise: 0.004,
            subject_ratio_spread: 0.2,
            ..SynthProfile::separable(duration)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "duration {} must be positive",
                self.duration
            )));
        }
        if !(self.eeg_ratio_factor >= 2.0) {
            return Err(Error::InvalidProfile(format!(
                "eeg_ratio_factor {} must be at least 2",
                self.eeg_ratio_factor
            )));
        }
        if !(0.0..=1.0).contains(&self.dynamics_effect) {
            return Err(Error::InvalidProfile("dynamics_effect must lie in [0, 1]".into()));
        }
        for e in &self.drowsy_episodes {
            if !(e.start < e.end && e.start >= 0.0 && e.end <= self.duration) {
                return Err(Error::InvalidProfile(format!(
                    "episode [{}, {}) outside session",
                    e.start, e.end
                )));
            }
        }
        let noise = [
            self.steering_noise,
            self.nuisance_gain,
            self.lane_noise,
            self.subject_ratio_spread,
        ];
        if noise.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidProfile(
                "noise levels must be finite and non-negative".into(),
            ));
        }
        if let Some(drt) = &self.drt {
            if !(drt.period_min > 0.0 && drt.period_min <= drt.period_max) {
                return Err(Error::InvalidProfile("DRT period range is invalid".into()));
            }
        }
        Ok(())
    }

    fn drowsy_at(&self, t: f64) -> bool {
        self.drowsy_episodes.iter().any(|e| e.contains(t))
    }
}

/// Several sessions sharing one profile template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetProfile {
    pub profile: SynthProfile,
    #[serde(default = "default_count")]
    pub subjects: usize,
    #[serde(default = "default_count")]
    pub sessions_per_subject: usize,
}

fn default_count() -> usize {
    1
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn standardize(mut x: Vec<f64>) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    x.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    x
}

/// Unit-variance first-order autoregressive noise with time constant `tau`.
fn ar1(n: usize, tau: f64, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = (-1.0 / (tau * rate)).exp();
    let b = (1.0 - a * a).sqrt();
    let mut x = normal(rng);
    (0..n)
        .map(|_| {
            x = a * x + b * normal(rng);
            x
        })
        .collect()
}

/// Unit-variance resonant noise centred on `freq` Hz.
fn resonant(n: usize, freq: f64, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = 0.98;
    let w = 2.0 * PI * freq / rate;
    let (c1, c2) = (2.0 * r * w.cos(), -r * r);
    let (mut x1, mut x2) = (0.0, 0.0);
    let burn = (4.0 * rate) as usize;
    let mut out = Vec::with_capacity(n);
    for i in 0..n + burn {
        let x = c1 * x1 + c2 * x2 + normal(rng);
        x2 = x1;
        x1 = x;
        if i >= burn {
            out.push(x);
        }
    }
    standardize(out)
}

/// Unit-variance noise with an ideal band-pass spectrum on `[lo, hi)` Hz.
fn band_noise(n: usize, rate: f64, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(normal(rng), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = bin as f64 * rate / n as f64;
        if !(f >= lo && f < hi) {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    standardize(buf.iter().map(|c| c.re).collect())
}

fn dynamics_channels(profile: &SynthProfile, rng: &mut ChaCha8Rng) -> BTreeMap<ChannelId, Channel> {
    let rate = DYNAMICS_RATE;
    let n = (profile.duration * rate).round() as usize;
    let effect = profile.dynamics_effect;
    let drowsy: Vec<f64> = (0..n)
        .map(|i| {
            if profile.drowsy_at(i as f64 / rate) {
                effect
            } else {
                0.0
            }
        })
        .collect();

    let fast = resonant(n, 0.8, rate, rng);
    let slow = resonant(n, 0.2, rate, rng);
    let drift = ar1(n, 5.0, rate, rng);
    let nuisance = ar1(n, 20.0, rate, rng);

    let theta: Vec<f64> = (0..n)
        .map(|i| {
            let d = drowsy[i];
            let gain = (profile.nuisance_gain * nuisance[i]).exp();
            let corrections = gain * ((1.0 - d) * 0.02 * fast[i] + d * 0.012 * slow[i]);
            let wander = (0.004 + 0.03 * d) * drift[i];
            corrections + wander + profile.steering_noise * normal(rng)
        })
        .collect();
    let theta_dot: Vec<f64> = (0..n)
        .map(|i| {
            let prev = theta[i.saturating_sub(1)];
            let next = theta[(i + 1).min(n - 1)];
            let span = ((i + 1).min(n - 1) - i.saturating_sub(1)).max(1) as f64;
            (next - prev) * rate / span
        })
        .collect();

    let lane = ar1(n, 3.0, rate, rng);
    let delta: Vec<f64> = (0..n)
        .map(|i| profile.lane_noise * (1.0 + 2.0 * drowsy[i]) * lane[i] + 0.005 * normal(rng))
        .collect();

    let speed = ar1(n, 10.0, rate, rng);
    let v_x: Vec<f64> = (0..n).map(|i| 29.0 + 0.3 * (1.0 + drowsy[i]) * speed[i]).collect();
    let a_x: Vec<f64> = (0..n)
        .map(|i| {
            let prev = v_x[i.saturating_sub(1)];
            (v_x[i] - prev) * rate * 0.1 + 0.02 * normal(rng)
        })
        .collect();
    // Bicycle model: steering ratio 15, wheelbase 2.7 m.
    let a_y: Vec<f64> = (0..n)
        .map(|i| v_x[i] * v_x[i] * theta[i] / (15.0 * 2.7) + 0.02 * normal(rng))
        .collect();

    let columns = [theta, theta_dot, v_x, a_x, a_y, delta];
    ChannelId::DYNAMICS
        .iter()
        .zip(columns)
        .map(|(&id, samples)| (id, Channel { rate, samples }))
        .collect()
}

fn eeg_channels(profile: &SynthProfile, rng: &mut ChaCha8Rng) -> BTreeMap<ChannelId, Channel> {
    let rate = EEG_RATE;
    let n = (profile.duration * rate).round() as usize;
    let baseline = (profile.subject_ratio_spread * normal(rng)).exp().sqrt();
    let boost = profile.eeg_ratio_factor.sqrt();
    let gain: Vec<f64> = (0..n)
        .map(|i| baseline * if profile.drowsy_at(i as f64 / rate) { boost } else { 1.0 })
        .collect();
    let seeds: Vec<u64> = ChannelId::EEG.iter().map(|_| rng.random()).collect();
    ChannelId::EEG
        .par_iter()
        .zip(seeds)
        .map(|(&id, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = 4.0 * (0.8 + 0.4 * rng.random::<f64>());
            let theta = band_noise(n, rate, 4.0, 8.0, &mut rng);
            let alpha = band_noise(n, rate, 8.0, 13.0, &mut rng);
            let beta = band_noise(n, rate, 13.0, 20.0, &mut rng);
            let samples = (0..n)
                .map(|i| {
                    let slow = gain[i] * (theta[i] + alpha[i]);
                    let bg = 0.1 * normal(&mut rng);
                    scale * (slow + std::f64::consts::SQRT_2 * beta[i] + bg)
                })
                .collect();
            (id, Channel { rate, samples })
        })
        .collect()
}

fn events(profile: &SynthProfile, rng: &mut ChaCha8Rng) -> Vec<EventInterval> {
    let d = profile.duration;
    let mut out = Vec::new();
    if let Some(drt) = &profile.drt {
        let blocks = if drt.blocks.is_empty() {
            vec![Episode { start: 0.0, end: d }]
        } else {
            drt.blocks.clone()
        };
        for block in blocks {
            let mut t = block.start + rng.random_range(drt.period_min..=drt.period_max);
            while t < block.end.min(d) {
                let response = if profile.drowsy_at(t) {
                    rng.random_range(1.2..2.5)
                } else {
                    rng.random_range(0.4..0.9)
                };
                out.push(EventInterval {
                    kind: EventKind::Drt,
                    start: t,
                    end: (t + response).min(d),
                });
                t += rng.random_range(drt.period_min..=drt.period_max);
            }
        }
    }
    let mut t = rng.random_range(60.0..180.0);
    while t < d {
        let len = rng.random_range(2.0..4.0);
        out.push(EventInterval {
            kind: EventKind::Brake,
            start: t,
            end: (t + len).min(d),
        });
        t += rng.random_range(120.0..240.0);
    }
    let mut t = rng.random_range(45.0..150.0);
    while t < d {
        let len = rng.random_range(5.0..8.0);
        out.push(EventInterval {
            kind: EventKind::Question,
            start: t,
            end: (t + len).min(d),
        });
        t += rng.random_range(90.0..150.0);
    }
    out.retain(|e| e.start < e.end);
    merge_events(out)
}

/// Generates one session from `profile`, deterministically in `seed`.
pub fn generate_synthetic(profile: &SynthProfile, seed: u64) -> Result<Session> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels = dynamics_channels(profile, &mut rng);
    let mut eeg_rng = ChaCha8Rng::seed_from_u64(rng.random());
    if profile.include_eeg {
        channels.extend(eeg_channels(profile, &mut eeg_rng));
    }
    let events = events(profile, &mut rng);
    let frame = SignalFrame::new(
        profile.subject_id.clone(),
        profile.session_id.clone(),
        profile.duration,
        channels,
    )?;
    Ok(Session { frame, events })
}

/// Generates `subjects × sessions_per_subject` sessions named
/// `sub01-s1`, `sub01-s2`, …
pub fn generate_dataset(spec: &DatasetProfile, seed: u64) -> Result<Vec<Session>> {
    if spec.subjects == 0 || spec.sessions_per_subject == 0 {
        return Err(Error::InvalidProfile("dataset needs at least one session".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(SynthProfile, u64)> = (1..=spec.subjects)
        .flat_map(|s| (1..=spec.sessions_per_subject).map(move |k| (s, k)))
        .map(|(s, k)| {
            let mut p = spec.profile.clone();
            p.subject_id = format!("sub{s:02}");
            p.session_id = format!("sub{s:02}-s{k}");
            (p, rng.random())
        })
        .collect();
    jobs.par_iter().map(|(p, seed)| generate_synthetic(p, *seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let p = SynthProfile::separable(60.0);
        let a = generate_synthetic(&p, 1).unwrap();
        let b = generate_synthetic(&p, 1).unwrap();
        for (id, ch) in a.frame.channels() {
            let other = &b.frame.channels()[id];
            let bits = |v: &Vec<f64>| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&ch.samples), bits(&other.samples), "{id}");
        }
        assert_eq!(a.events, b.events);
        let c = generate_synthetic(&p, 2).unwrap();
        assert_ne!(a.frame, c.frame);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = SynthProfile::awake(0.0);
        assert!(matches!(generate_synthetic(&p, 0), Err(Error::InvalidProfile(_))));
        p.duration = 10.0;
        p.eeg_ratio_factor = 1.5;
        assert!(matches!(generate_synthetic(&p, 0), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn frame_has_all_channels() {
        let s = generate_synthetic(&SynthProfile::awake(30.0), 4).unwrap();
        assert_eq!(s.frame.channels().len(), 14);
        assert_eq!(s.frame.channel(ChannelId::Theta).unwrap().samples.len(), 1800);
        assert_eq!(s.frame.channel(ChannelId::Eeg(3)).unwrap().samples.len(), 15000);
        assert!(s.events.iter().any(|e| e.kind == EventKind::Drt));
    }

    #[test]
    fn episodes_widen_lane_offset() {
        let p = SynthProfile::separable(600.0);
        let s = generate_synthetic(&p, 9).unwrap();
        let delta = &s.frame.channel(ChannelId::Delta).unwrap().samples;
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for (i, v) in delta.iter().enumerate() {
            if p.drowsy_at(i as f64 / 60.0) {
                inside.push(*v);
            } else {
                outside.push(*v);
            }
        }
        let var = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
        };
        assert!(var(&inside) > 2.0 * var(&outside));
    }
}
