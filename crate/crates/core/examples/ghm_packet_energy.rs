//! Three-level GHM multiwavelet packet decomposition: leaf energies, energy
//! conservation and perfect reconstruction.

use ddd_core::multiwavelet::{
    packet_decompose, packet_reconstruct, postfilter, prefilter, stream_energy, wavelet8, MultiFilterBank, DEPTH,
};

fn main() -> ddd_core::Result<()> {
    let rate = 25.0;
    let x: Vec<f64> = (0..256)
        .map(|i| {
            let t = i as f64 / rate;
            (2.0 * std::f64::consts::PI * 0.4 * t).sin() + 0.2 * (2.0 * std::f64::consts::PI * 9.0 * t).sin()
        })
        .collect();
    let bank = MultiFilterBank::ghm();
    let stream = prefilter(&x)?;
    let tree = packet_decompose(&stream, &bank, DEPTH)?;
    let leaves: f64 = tree.leaves.iter().map(|l| stream_energy(l)).sum();
    println!("input energy {:.6}, leaf energy {:.6}", stream_energy(&stream), leaves);
    let back = postfilter(&packet_reconstruct(&tree, &bank));
    let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max reconstruction error {err:.2e}");
    for (name, e) in wavelet8(&x)?.names.iter().zip(wavelet8(&x)?.values) {
        println!("  {name}: {e:.4}");
    }
    Ok(())
}
