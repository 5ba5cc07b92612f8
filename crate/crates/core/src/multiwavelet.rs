//! GHM multiwavelet packet decomposition.
//!
//! The GHM system has two scaling functions and two wavelets, so it acts on
//! streams of 2-vectors through four 2×2 lowpass taps `H` and four highpass
//! taps `G`. A scalar signal is paired into 2-vectors by an orthogonal
//! prefilter, split three times into low and high branches with periodic
//! boundaries, and the energy of each of the 8 leaves becomes a feature.

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Depth of the packet tree used for band-energy features.
pub const DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiFilterBank {
    pub h: [Mat2; 4],
    pub g: [Mat2; 4],
}

impl MultiFilterBank {
    /// Geronimo–Hardin–Massopust taps, normalized so that the analysis
    /// operator is orthogonal.
    pub fn ghm() -> Self {
        let r2 = std::f64::consts::SQRT_2;
        MultiFilterBank {
            h: [
                [[3.0 / (5.0 * r2), 4.0 / 5.0], [-1.0 / 20.0, -3.0 / (10.0 * r2)]],
                [[3.0 / (5.0 * r2), 0.0], [9.0 / 20.0, 1.0 / r2]],
                [[0.0, 0.0], [9.0 / 20.0, -3.0 / (10.0 * r2)]],
                [[0.0, 0.0], [-1.0 / 20.0, 0.0]],
            ],
            g: [
                [[-1.0 / 20.0, -3.0 / (10.0 * r2)], [1.0 / (10.0 * r2), 3.0 / 10.0]],
                [[9.0 / 20.0, -1.0 / r2], [-9.0 / (10.0 * r2), 0.0]],
                [[9.0 / 20.0, -3.0 / (10.0 * r2)], [9.0 / (10.0 * r2), -3.0 / 10.0]],
                [[-1.0 / 20.0, 0.0], [-1.0 / (10.0 * r2), 0.0]],
            ],
        }
    }
}

fn mul(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn mul_t(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]]
}

/// Householder reflection taking (1, 1)/√2 onto the lowpass eigenvector
/// (√2, 1)/√3 of the GHM bank, so a constant signal lands entirely in the
/// lowest band. Symmetric and orthogonal, hence its own inverse.
fn prefilter_matrix() -> Mat2 {
    let e = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
    let u = [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()];
    let d = [e[0] - u[0], e[1] - u[1]];
    let nn = d[0] * d[0] + d[1] * d[1];
    [
        [1.0 - 2.0 * d[0] * d[0] / nn, -2.0 * d[0] * d[1] / nn],
        [-2.0 * d[1] * d[0] / nn, 1.0 - 2.0 * d[1] * d[1] / nn],
    ]
}

/// Pairs consecutive samples into 2-vectors and applies the prefilter. An
/// odd trailing sample is dropped.
pub fn prefilter(samples: &[f64]) -> Result<Vec<Vec2>> {
    if samples.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let p = prefilter_matrix();
    Ok(samples.chunks_exact(2).map(|c| mul(&p, &[c[0], c[1]])).collect())
}

/// Inverse of [`prefilter`].
pub fn postfilter(stream: &[Vec2]) -> Vec<f64> {
    let p = prefilter_matrix();
    stream.iter().flat_map(|v| mul(&p, v)).collect()
}

/// One analysis step with periodic extension. `stream` must have even,
/// nonzero length.
pub fn analyze(stream: &[Vec2], bank: &MultiFilterBank) -> (Vec<Vec2>, Vec<Vec2>) {
    let len = stream.len();
    let half = len / 2;
    let mut low = vec![[0.0; 2]; half];
    let mut high = vec![[0.0; 2]; half];
    for n in 0..half {
        for k in 0..4 {
            let v = &stream[(2 * n + k) % len];
            let (a, b) = (mul(&bank.h[k], v), mul(&bank.g[k], v));
            low[n][0] += a[0];
            low[n][1] += a[1];
            high[n][0] += b[0];
            high[n][1] += b[1];
        }
    }
    (low, high)
}

/// Adjoint of [`analyze`], which is also its inverse.
pub fn synthesize(low: &[Vec2], high: &[Vec2], bank: &MultiFilterBank) -> Vec<Vec2> {
    let len = 2 * low.len();
    let mut out = vec![[0.0; 2]; len];
    for n in 0..low.len() {
        for k in 0..4 {
            let a = mul_t(&bank.h[k], &low[n]);
            let b = mul_t(&bank.g[k], &high[n]);
            let o = &mut out[(2 * n + k) % len];
            o[0] += a[0] + b[0];
            o[1] += a[1] + b[1];
        }
    }
    out
}

/// Full packet tree. Leaf `i` is reached by reading the bits of `i` from the
/// most significant: 0 takes the low branch, 1 the high branch.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTree {
    pub depth: usize,
    /// Number of input vectors transformed: the input length rounded down to
    /// a multiple of `2^depth`.
    pub used_len: usize,
    pub leaves: Vec<Vec<Vec2>>,
}

pub fn packet_decompose(stream: &[Vec2], bank: &MultiFilterBank, depth: usize) -> Result<PacketTree> {
    let block = 1usize << depth;
    if stream.len() < block {
        return Err(Error::InsufficientSamples {
            needed: 2 * block,
            got: 2 * stream.len(),
        });
    }
    let used_len = stream.len() / block * block;
    let mut level = vec![stream[..used_len].to_vec()];
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|node| {
                let (lo, hi) = analyze(node, bank);
                [lo, hi]
            })
            .collect();
    }
    Ok(PacketTree {
        depth,
        used_len,
        leaves: level,
    })
}

/// Inverse of [`packet_decompose`] on the transformed prefix.
pub fn packet_reconstruct(tree: &PacketTree, bank: &MultiFilterBank) -> Vec<Vec2> {
    let mut level = tree.leaves.clone();
    while level.len() > 1 {
        level = level.chunks_exact(2).map(|p| synthesize(&p[0], &p[1], bank)).collect();
    }
    level.pop().unwrap_or_default()
}

pub fn stream_energy(stream: &[Vec2]) -> f64 {
    stream.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum()
}

/// Energy of every leaf in natural packet order, named `wavelet8_band_i`.
pub fn band_energies(tree: &PacketTree) -> FeatureVector {
    let names = (0..tree.leaves.len()).map(|i| format!("wavelet8_band_{i}")).collect();
    let values = tree.leaves.iter().map(|l| stream_energy(l)).collect();
    FeatureVector::new(names, values)
}

/// Prefilter, depth-3 GHM packet decomposition and leaf energies of a scalar
/// signal. Needs at least 16 samples.
pub fn wavelet8(samples: &[f64]) -> Result<FeatureVector> {
    if samples.len() < 2 << DEPTH {
        return Err(Error::InsufficientSamples {
            needed: 2 << DEPTH,
            got: samples.len(),
        });
    }
    let stream = prefilter(samples)?;
    Ok(band_energies(&packet_decompose(
        &stream,
        &MultiFilterBank::ghm(),
        DEPTH,
    )?))
}
