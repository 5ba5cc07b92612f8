//! Percentile labels from the EEG (theta + alpha) / beta ratio, and labels
//! from DRT event intervals.

use ddd_core::dataset::{generate_synthetic, SynthProfile};
use ddd_core::labeling::{label_by_eeg, label_by_event, ratio_per_window, LabelState, LabelThresholds};
use ddd_core::signal::WindowSpec;

fn main() -> ddd_core::Result<()> {
    let session = generate_synthetic(&SynthProfile::separable(600.0), 5)?;
    let spec = WindowSpec::new(3.0, 0.5, 60.0)?;
    let ratios: Vec<f64> = ratio_per_window(&session.frame, &spec)?
        .into_iter()
        .flatten()
        .map(|r| r.value)
        .collect();
    let labels = label_by_eeg(&ratios, &LabelThresholds::default())?;
    let count = |s: LabelState| labels.iter().filter(|&&l| l == s).count();
    println!(
        "EEG: {} windows -> {} awake, {} drowsy, {} unlabeled",
        labels.len(),
        count(LabelState::Awake),
        count(LabelState::Drowsy),
        count(LabelState::Unlabeled)
    );

    let spans = spec.spans((session.frame.duration() * spec.rate) as usize);
    let events = label_by_event(&spans, &session.events, 5.0);
    let count = |s: LabelState| events.iter().filter(|&&l| l == s).count();
    println!(
        "DRT events: {} drowsy, {} awake within 5 s of an interval, {} unlabeled",
        count(LabelState::Drowsy),
        count(LabelState::Awake),
        count(LabelState::Unlabeled)
    );
    Ok(())
}
