//! Generate a synthetic session, write it as CSV plus manifest, and load it
//! back.

use ddd_core::dataset::{generate_synthetic, load_dataset, write_session, SynthProfile};

fn main() -> ddd_core::Result<()> {
    let session = generate_synthetic(&SynthProfile::separable(300.0), 11)?;
    let dir = std::env::temp_dir().join("ddd_synthetic_session");
    let manifest = write_session(&session, &dir, "demo")?;
    let loaded = load_dataset(&manifest)?;
    let frame = &loaded[0].frame;
    println!("manifest {}", manifest.display());
    println!(
        "{:.0} s, {} channels, {} DRT events",
        frame.duration(),
        frame.channels().len(),
        loaded[0].events.len()
    );
    Ok(())
}
