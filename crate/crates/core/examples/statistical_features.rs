//! The 36 statistical, 8 wavelet and 15 temporal features of one window.

use ddd_core::dataset::{generate_synthetic, SynthProfile};
use ddd_core::features::{extract_all, FeatureFamily};
use ddd_core::signal::{segment, ChannelId, WindowSpec};

fn main() -> ddd_core::Result<()> {
    let session = generate_synthetic(&SynthProfile::separable(60.0), 2)?;
    let spec = WindowSpec::new(3.0, 0.5, 60.0)?;
    let frame = session.frame.resampled(&ChannelId::DYNAMICS, 60.0)?;
    let windows = segment(&frame, &spec, &ChannelId::DYNAMICS)?;
    let v = extract_all(&windows[0], &FeatureFamily::all())?;
    println!("{} features", v.len());
    for (name, value) in v.names.iter().zip(&v.values).step_by(6) {
        println!("  {name:<44} {value:>12.5}");
    }
    Ok(())
}
