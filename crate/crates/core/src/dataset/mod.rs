//! Session ingestion and the CSV/JSON interchange format.
//!
//! A session on disk is a JSON manifest pointing at up to three CSV files:
//!
//! * dynamics: `t,theta,theta_dot,v_x,a_x,a_y,delta` at about 60 Hz
//! * EEG: `t,eeg_1,...,eeg_8` at about 500 Hz, in µV
//! * events: `kind,start,end` with `kind` one of `drt`, `brake`, `question`
//!
//! Timestamps are shifted so that the first dynamics sample sits at t = 0.
//! Gaps shorter than 0.5 s are filled by linear interpolation; longer gaps
//! split the recording into separate frames.

mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelId, SignalFrame};

pub use synth::{generate_dataset, generate_synthetic, DatasetProfile, DrtSchedule, Episode, SynthProfile};

pub const DYNAMICS_RATE: f64 = 60.0;
pub const EEG_RATE: f64 = 500.0;
/// Gaps at least this long (seconds) split a recording.
pub const MAX_INTERPOLATED_GAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Drt,
    Brake,
    Question,
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "drt" => Ok(EventKind::Drt),
            "brake" => Ok(EventKind::Brake),
            "question" => Ok(EventKind::Question),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::Drt => "drt",
            EventKind::Brake => "brake",
            EventKind::Question => "question",
        })
    }
}

/// Event in session time (seconds), `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventInterval {
    pub kind: EventKind,
    pub start: f64,
    pub end: f64,
}

/// File-level description of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub subject_id: String,
    pub session_id: String,
    pub dynamics: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eeg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
}

impl SessionManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: SessionManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        manifest.dynamics = base.join(&manifest.dynamics);
        manifest.eeg = manifest.eeg.map(|p| base.join(p));
        manifest.events = manifest.events.map(|p| base.join(p));
        Ok(manifest)
    }
}

/// A contiguous frame and the events that fall on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub frame: SignalFrame,
    pub events: Vec<EventInterval>,
}

/// Parsed CSV: timestamps plus one column per requested name.
#[derive(Debug, Clone)]
struct Table {
    times: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

fn read_table(path: &Path, names: &[String]) -> Result<Table> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers()?.clone();
    let index_of = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaError(name.to_string()))
    };
    let t_col = index_of("t")?;
    let cols = names.iter().map(|n| index_of(n)).collect::<Result<Vec<_>>>()?;

    let mut table = Table {
        times: Vec::new(),
        columns: vec![Vec::new(); names.len()],
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::MalformedRow {
                row,
                message: format!("missing field `{name}`"),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("`{raw}` is not a number in column `{name}`"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteValue {
                    row,
                    column: name.to_string(),
                })
            }
        };
        let t = field(t_col, "t")?;
        if let Some(&prev) = table.times.last() {
            if t <= prev {
                return Err(Error::TimestampError(row));
            }
        }
        table.times.push(t);
        for (k, (&col, name)) in cols.iter().zip(names).enumerate() {
            table.columns[k].push(field(col, name)?);
        }
    }
    Ok(table)
}

/// Uniformly sampled stretch of a table starting at `t0`.
#[derive(Debug, Clone)]
struct Run {
    t0: f64,
    columns: Vec<Vec<f64>>,
}

impl Run {
    fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Splits a table into uniformly sampled runs at `rate`, interpolating
/// gaps shorter than [`MAX_INTERPOLATED_GAP`].
fn regularize(table: &Table, rate: f64, origin: f64) -> Vec<Run> {
    let mut runs = Vec::new();
    if table.times.is_empty() {
        return runs;
    }
    let width = table.columns.len();
    let mut current = Run {
        t0: table.times[0] - origin,
        columns: table.columns.iter().map(|c| vec![c[0]]).collect(),
    };
    for i in 1..table.times.len() {
        let dt = table.times[i] - table.times[i - 1];
        let missing = (dt * rate).round() as i64 - 1;
        if dt - 1.0 / rate >= MAX_INTERPOLATED_GAP {
            runs.push(std::mem::replace(
                &mut current,
                Run {
                    t0: table.times[i] - origin,
                    columns: vec![Vec::new(); width],
                },
            ));
        } else if missing > 0 {
            for m in 1..=missing {
                let frac = m as f64 / (missing + 1) as f64;
                for (k, col) in current.columns.iter_mut().enumerate() {
                    let (a, b) = (table.columns[k][i - 1], table.columns[k][i]);
                    col.push(a + (b - a) * frac);
                }
            }
        }
        for (k, col) in current.columns.iter_mut().enumerate() {
            col.push(table.columns[k][i]);
        }
    }
    runs.push(current);
    runs
}

fn dynamics_names() -> Vec<String> {
    ChannelId::DYNAMICS.iter().map(|c| c.to_string()).collect()
}

fn eeg_names() -> Vec<String> {
    ChannelId::EEG.iter().map(|c| c.to_string()).collect()
}

/// Reads an events CSV, shifting times by `-origin` and merging overlapping
/// intervals of the same kind.
pub fn read_events(path: &Path, origin: f64) -> Result<Vec<EventInterval>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers()?.clone();
    let idx = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaError(name.to_string()))
    };
    let (k_col, s_col, e_col) = (idx("kind")?, idx("start")?, idx("end")?);
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let get = |c: usize| record.get(c).unwrap_or("");
        let kind: EventKind = get(k_col)
            .parse()
            .map_err(|message| Error::MalformedRow { row, message })?;
        let num = |c: usize, name: &str| -> Result<f64> {
            let v: f64 = get(c).parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("`{}` is not a number in column `{name}`", get(c)),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteValue {
                    row,
                    column: name.to_string(),
                })
            }
        };
        let (start, end) = (num(s_col, "start")?, num(e_col, "end")?);
        if start >= end {
            return Err(Error::MalformedRow {
                row,
                message: format!("event start {start} is not before end {end}"),
            });
        }
        events.push(EventInterval {
            kind,
            start: start - origin,
            end: end - origin,
        });
    }
    Ok(merge_events(events))
}

/// Sorts events and merges overlapping intervals of the same kind.
pub fn merge_events(mut events: Vec<EventInterval>) -> Vec<EventInterval> {
    events.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.start.total_cmp(&b.start)));
    let mut merged: Vec<EventInterval> = Vec::with_capacity(events.len());
    for ev in events {
        match merged.last_mut() {
            Some(last) if last.kind == ev.kind && ev.start <= last.end => {
                last.end = last.end.max(ev.end);
            }
            _ => merged.push(ev),
        }
    }
    merged.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.kind.cmp(&b.kind)));
    merged
}

fn channel_map(ids: &[ChannelId], rate: f64, columns: Vec<Vec<f64>>) -> BTreeMap<ChannelId, Channel> {
    ids.iter()
        .zip(columns)
        .map(|(&id, samples)| (id, Channel { rate, samples }))
        .collect()
}

fn slice_run(run: &Run, from: usize, n: usize) -> Vec<Vec<f64>> {
    run.columns.iter().map(|c| c[from..from + n].to_vec()).collect()
}

/// Loads one session. Returns more than one [`Session`] when a gap of
/// 0.5 s or more splits the recording; split parts get session ids
/// suffixed with `.1`, `.2`, …
pub fn load_session(manifest: &SessionManifest) -> Result<Vec<Session>> {
    let dynamics = read_table(&manifest.dynamics, &dynamics_names())?;
    let origin = *dynamics
        .times
        .first()
        .ok_or_else(|| Error::InsufficientData(format!("{} has no rows", manifest.dynamics.display())))?;
    let dyn_runs = regularize(&dynamics, DYNAMICS_RATE, origin);
    let eeg_runs = match &manifest.eeg {
        Some(path) => Some(regularize(&read_table(path, &eeg_names())?, EEG_RATE, origin)),
        None => None,
    };
    let events = match &manifest.events {
        Some(path) => read_events(path, origin)?,
        None => Vec::new(),
    };

    // (start time, dynamics columns, eeg columns)
    let mut parts: Vec<(f64, Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> = Vec::new();
    for run in &dyn_runs {
        match &eeg_runs {
            None => parts.push((run.t0, run.columns.clone(), None)),
            Some(eeg_runs) => {
                let run_end = run.t0 + run.len() as f64 / DYNAMICS_RATE;
                for eeg in eeg_runs {
                    let eeg_end = eeg.t0 + eeg.len() as f64 / EEG_RATE;
                    let start = run.t0.max(eeg.t0);
                    if run_end.min(eeg_end) <= start {
                        continue;
                    }
                    let d0 = ((start - run.t0) * DYNAMICS_RATE - 1e-6).ceil().max(0.0) as usize;
                    let e0 = ((start - eeg.t0) * EEG_RATE - 1e-6).ceil().max(0.0) as usize;
                    let d_avail = run.len().saturating_sub(d0);
                    let e_avail = eeg.len().saturating_sub(e0);
                    let duration = (d_avail as f64 / DYNAMICS_RATE).min(e_avail as f64 / EEG_RATE);
                    let d_n = d_avail.min((duration * DYNAMICS_RATE).round() as usize + 1);
                    let e_n = e_avail.min((duration * EEG_RATE).round() as usize + 1);
                    if d_n < 2 || e_n < 2 {
                        continue;
                    }
                    let t_start = run.t0 + d0 as f64 / DYNAMICS_RATE;
                    parts.push((t_start, slice_run(run, d0, d_n), Some(slice_run(eeg, e0, e_n))));
                }
            }
        }
    }

    let split = parts.len() > 1;
    parts
        .into_iter()
        .enumerate()
        .map(|(k, (t_start, dyn_cols, eeg_cols))| {
            let n = dyn_cols[0].len();
            let duration = n as f64 / DYNAMICS_RATE;
            let mut channels = channel_map(&ChannelId::DYNAMICS, DYNAMICS_RATE, dyn_cols);
            if let Some(cols) = eeg_cols {
                channels.extend(channel_map(&ChannelId::EEG, EEG_RATE, cols));
            }
            let session_id = if split {
                format!("{}.{}", manifest.session_id, k + 1)
            } else {
                manifest.session_id.clone()
            };
            let frame = SignalFrame::new(manifest.subject_id.clone(), session_id, duration, channels)?;
            let events = events
                .iter()
                .filter(|e| e.end > t_start && e.start < t_start + duration)
                .map(|e| EventInterval {
                    kind: e.kind,
                    start: e.start - t_start,
                    end: e.end - t_start,
                })
                .collect();
            Ok(Session { frame, events })
        })
        .collect()
}

/// Loads every session below `path`: a single manifest file, or a
/// directory whose `*.json` files are manifests (sorted by file name).
pub fn load_dataset(path: &Path) -> Result<Vec<Session>> {
    let manifests = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut sessions = Vec::new();
    for m in manifests {
        sessions.extend(load_session(&SessionManifest::read(&m)?)?);
    }
    Ok(sessions)
}

fn write_table(path: &Path, header: &[String], times: &[f64], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["t".to_string()];
    head.extend(header.iter().cloned());
    w.write_record(&head)?;
    let mut row = Vec::with_capacity(columns.len() + 1);
    for (i, t) in times.iter().enumerate() {
        row.clear();
        row.push(t.to_string());
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `session` as `<stem>_dynamics.csv`, `<stem>_eeg.csv` (when EEG
/// channels exist), `<stem>_events.csv` and `<stem>.json` under `dir`.
/// Returns the manifest path.
pub fn write_session(session: &Session, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let frame = &session.frame;

    let dyn_cols: Vec<&[f64]> = ChannelId::DYNAMICS
        .iter()
        .map(|&id| frame.channel(id).map(|c| c.samples.as_slice()))
        .collect::<Result<_>>()?;
    let n = dyn_cols.iter().map(|c| c.len()).min().unwrap_or(0);
    let times: Vec<f64> = (0..n).map(|i| i as f64 / DYNAMICS_RATE).collect();
    let dynamics = format!("{stem}_dynamics.csv");
    write_table(&dir.join(&dynamics), &dynamics_names(), &times, &dyn_cols)?;

    let eeg = if frame.eeg_channels().len() == ChannelId::EEG.len() {
        let cols: Vec<&[f64]> = ChannelId::EEG
            .iter()
            .map(|&id| frame.channels()[&id].samples.as_slice())
            .collect();
        let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
        let times: Vec<f64> = (0..n).map(|i| i as f64 / EEG_RATE).collect();
        let name = format!("{stem}_eeg.csv");
        write_table(&dir.join(&name), &eeg_names(), &times, &cols)?;
        Some(PathBuf::from(name))
    } else {
        None
    };

    let events = format!("{stem}_events.csv");
    let mut w = csv::Writer::from_path(dir.join(&events))?;
    w.write_record(["kind", "start", "end"])?;
    for e in &session.events {
        w.write_record([e.kind.to_string(), e.start.to_string(), e.end.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(&events), e))?;

    let manifest = SessionManifest {
        subject_id: frame.subject_id().to_string(),
        session_id: frame.session_id().to_string(),
        dynamics: PathBuf::from(dynamics),
        eeg,
        events: Some(PathBuf::from(events)),
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
