//! Shared fixtures: a deterministic generator of handwriting-like stroke
//! images (dark background, saturated stroke cores, byte-quantized like
//! IDX archives) and an IDX3 writer.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One stroke image: a random thick polyline with soft edges, quantized to
/// bytes so backgrounds are exactly 0 and stroke cores exactly 255.
pub fn synth_digit(rng: &mut ChaCha8Rng, side: usize) -> Vec<u8> {
    let s = side as f64;
    let mut img = vec![0.0f64; side * side];
    let mut pts: Vec<(f64, f64)> =
        vec![(rng.gen_range(5.0..s - 5.0), rng.gen_range(5.0..s - 5.0))];
    let segments = rng.gen_range(2..5usize);
    for _ in 0..segments {
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let len = rng.gen_range(6.0..14.0);
        let last = *pts.last().unwrap();
        pts.push((
            (last.0 + len * ang.cos()).clamp(3.0, s - 3.0),
            (last.1 + len * ang.sin()).clamp(3.0, s - 3.0),
        ));
    }
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let ab = (b.0 - a.0, b.1 - a.1);
        let denom = (ab.0 * ab.0 + ab.1 * ab.1).max(1e-9);
        for r in 0..side {
            for c in 0..side {
                let p = (r as f64, c as f64);
                let t = (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / denom).clamp(0.0, 1.0);
                let proj = (a.0 + t * ab.0, a.1 + t * ab.1);
                let d = ((p.0 - proj.0).powi(2) + (p.1 - proj.1).powi(2)).sqrt();
                let v = (2.2 - d).clamp(0.0, 1.0);
                let idx = r * side + c;
                if v > img[idx] {
                    img[idx] = v;
                }
            }
        }
    }
    img.iter().map(|&v| (v * 255.0).round() as u8).collect()
}

pub fn write_idx(path: &Path, images: &[Vec<u8>], side: usize) {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(side as u32).to_be_bytes());
    bytes.extend_from_slice(&(side as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), side * side);
        bytes.extend_from_slice(img);
    }
    fs::write(path, bytes).unwrap();
}

/// Writes a six-digit 28x28 fixture archive and returns its path.
pub fn digit_archive(dir: &Path, seed: u64, count: usize, side: usize) -> std::path::PathBuf {
    let mut r = rng(seed);
    let images: Vec<Vec<u8>> = (0..count).map(|_| synth_digit(&mut r, side)).collect();
    let path = dir.join("digits.idx3");
    write_idx(&path, &images, side);
    path
}
