//! Downsample a 60 Hz steering signal and cut it into overlapping windows.

use std::collections::BTreeMap;

use ddd_core::signal::{resample, segment, Channel, ChannelId, SignalFrame, WindowSpec};

fn main() -> ddd_core::Result<()> {
    let rate = 60.0;
    let theta: Vec<f64> = (0..600).map(|i| (i as f64 / rate * 0.7).sin()).collect();
    let coarse = resample(&theta, rate, 25.0)?;
    println!("{} samples at 60 Hz -> {} samples at 25 Hz", theta.len(), coarse.len());

    let mut channels = BTreeMap::new();
    channels.insert(ChannelId::Theta, Channel { rate, samples: theta });
    let frame = SignalFrame::new("s1", "s1-a", 10.0, channels)?;
    let spec = WindowSpec::new(3.0, 0.5, 60.0)?;
    let windows = segment(&frame, &spec, &[ChannelId::Theta])?;
    println!(
        "window {} samples, stride {}, {} windows (predicted {})",
        spec.window_samples(),
        spec.stride(),
        windows.len(),
        spec.window_count(600)
    );
    for w in windows.iter().take(3) {
        println!("  #{} starts at {:.1} s", w.index, w.start_time);
    }
    Ok(())
}
