//! Seeded synthetic test imagery: dark noisy water, bright island blobs
//! with ragged radial edges, and a sprinkle of bright speckles for the
//! small-component filter to eat.
//!
//! Generation uses only rational arithmetic (no trig), so a given
//! (width, height, seed) triple produces identical bytes on every build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::RgbImage;

const JITTER_BINS: usize = 64;

struct Blob {
    cx: f64,
    cy: f64,
    radius: f64,
    value: u8,
    jitter: [f64; JITTER_BINS],
}

/// Monotone stand-in for atan2 that needs only +,-,/: maps direction to
/// [0,4), then to a jitter bin.
fn angle_bin(dx: f64, dy: f64) -> usize {
    let denom = dx.abs() + dy.abs();
    if denom == 0.0 {
        return 0;
    }
    let a = dx / denom;
    let pseudo = if dy >= 0.0 { 1.0 - a } else { 3.0 + a };
    (((pseudo / 4.0) * JITTER_BINS as f64) as usize).min(JITTER_BINS - 1)
}

/// Deterministic island scene as an RGB image (gray triplets).
pub fn synthetic_islands(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_blobs = rng.gen_range(3..=8);
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| Blob {
            cx: rng.gen_range(0.1..0.9) * width as f64,
            cy: rng.gen_range(0.1..0.9) * height as f64,
            radius: rng.gen_range(0.06..0.16) * width.min(height) as f64,
            value: rng.gen_range(185..=235),
            jitter: std::array::from_fn(|_| rng.gen_range(0.82..1.18)),
        })
        .collect();

    let mut gray = vec![0u8; width as usize * height as usize];
    for y in 0..height {
        for x in 0..width {
            let mut v: u8 = rng.gen_range(8..48);
            for blob in &blobs {
                let dx = x as f64 - blob.cx;
                let dy = y as f64 - blob.cy;
                let r = blob.radius * blob.jitter[angle_bin(dx, dy)];
                if dx * dx + dy * dy <= r * r {
                    v = v.max(blob.value);
                }
            }
            gray[(y * width + x) as usize] = v;
        }
    }

    // Bright speckles below any sensibly scaled small-component threshold.
    let speckles = (width as usize * height as usize / 8192).max(3);
    for _ in 0..speckles {
        let x = rng.gen_range(0..width);
        let y = rng.gen_range(0..height);
        gray[(y * width + x) as usize] = rng.gen_range(190..=230);
    }

    let data = gray.iter().flat_map(|&v| [v, v, v]).collect();
    RgbImage::new(width, height, data).expect("generated dimensions are valid")
}
