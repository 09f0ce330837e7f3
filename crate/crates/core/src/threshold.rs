//! Global threshold selection (Otsu's method over a 256-bin histogram)
//! and binarization.

use crate::binary::BinaryImage;
use crate::raster::GrayImage;

/// An integer gray level in [0,255]; pixels strictly above it binarize to
/// foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdLevel {
    pub level: u8,
}

/// Between-class variance of the split {<=t} / {>t}, up to the constant
/// factor 1/N^2: (sum0*cnt1 - sum1*cnt0)^2 / (cnt0*cnt1). The numerator is
/// exact in i128, so equal splits produce bit-equal scores no matter how
/// the class sums were accumulated.
fn between_class_score(cnt0: u64, sum0: u64, cnt1: u64, sum1: u64) -> f64 {
    let d = (sum0 as i128 * cnt1 as i128 - sum1 as i128 * cnt0 as i128) as f64;
    d * d / (cnt0 as f64 * cnt1 as f64)
}

/// Otsu's threshold: the t maximizing between-class variance, ties broken
/// toward the smallest t. A constant image returns its constant value.
pub fn otsu_threshold(img: &GrayImage) -> ThresholdLevel {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let nonzero: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if nonzero.len() == 1 {
        return ThresholdLevel { level: nonzero[0] as u8 };
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &n)| v as u64 * n).sum();
    let mut cnt0 = 0u64;
    let mut sum0 = 0u64;
    let mut best = (0u8, f64::NEG_INFINITY);
    for t in 0..=255u16 {
        cnt0 += hist[t as usize];
        sum0 += t as u64 * hist[t as usize];
        let cnt1 = total - cnt0;
        if cnt0 == 0 || cnt1 == 0 {
            continue;
        }
        let score = between_class_score(cnt0, sum0, cnt1, total_sum - sum0);
        if score > best.1 {
            best = (t as u8, score);
        }
    }
    ThresholdLevel { level: best.0 }
}

/// Foreground iff intensity strictly exceeds the level.
pub fn binarize(img: &GrayImage, t: ThresholdLevel) -> BinaryImage {
    let data = img.data().iter().map(|&v| v > t.level).collect();
    BinaryImage::new(img.width(), img.height(), data).expect("dimensions come from a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force reference: recompute both class sums from the histogram
    /// for every candidate t.
    fn otsu_brute_force(img: &GrayImage) -> u8 {
        let mut hist = [0u64; 256];
        for &v in img.data() {
            hist[v as usize] += 1;
        }
        let nonzero: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
        if nonzero.len() == 1 {
            return nonzero[0] as u8;
        }
        let mut best = (0u8, f64::NEG_INFINITY);
        for t in 0..=255usize {
            let cnt0: u64 = hist[..=t].iter().sum();
            let cnt1: u64 = hist[t + 1..].iter().sum();
            if cnt0 == 0 || cnt1 == 0 {
                continue;
            }
            let sum0: u64 = hist[..=t].iter().enumerate().map(|(v, &n)| v as u64 * n).sum();
            let sum1: u64 = hist[t + 1..]
                .iter()
                .enumerate()
                .map(|(i, &n)| (t + 1 + i) as u64 * n)
                .sum();
            let d = (sum0 as i128 * cnt1 as i128 - sum1 as i128 * cnt0 as i128) as f64;
            let score = d * d / (cnt0 as f64 * cnt1 as f64);
            if score > best.1 {
                best = (t as u8, score);
            }
        }
        best.0
    }

    #[test]
    fn constant_images_return_their_constant() {
        for v in [0u8, 1, 127, 200, 255] {
            let img = GrayImage::new(3, 3, vec![v; 9]).unwrap();
            assert_eq!(otsu_threshold(&img).level, v);
        }
    }

    #[test]
    fn two_level_image_splits_at_lower_level() {
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        assert_eq!(otsu_threshold(&img).level, 0);
    }

    #[test]
    fn matches_brute_force_on_random_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..100 {
            let data: Vec<u8> = (0..64 * 64).map(|_| rng.gen()).collect();
            let img = GrayImage::new(64, 64, data).unwrap();
            assert_eq!(otsu_threshold(&img).level, otsu_brute_force(&img), "case {case}");
        }
    }

    #[test]
    fn matches_brute_force_on_skewed_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..50 {
            // Few distinct levels provoke score ties.
            let levels: Vec<u8> = (0..3).map(|_| rng.gen_range(0..=255)).collect();
            let data: Vec<u8> = (0..256).map(|_| levels[rng.gen_range(0..levels.len())]).collect();
            let img = GrayImage::new(16, 16, data).unwrap();
            assert_eq!(otsu_threshold(&img).level, otsu_brute_force(&img));
        }
    }

    #[test]
    fn binarize_pinned_examples() {
        let img = GrayImage::new(4, 1, vec![0, 85, 170, 255]).unwrap();
        let bw = binarize(&img, ThresholdLevel { level: 127 });
        assert_eq!(bw.data(), &[false, false, true, true]);
        assert_eq!(binarize(&img, ThresholdLevel { level: 255 }).count_foreground(), 0);
        let nonzero = binarize(&img, ThresholdLevel { level: 0 });
        assert_eq!(nonzero.data(), &[false, true, true, true]);
    }

    proptest! {
        #[test]
        fn binarize_foreground_nonincreasing_in_t(
            data in proptest::collection::vec(any::<u8>(), 16),
            t1 in 0u8..255,
            bump in 1u8..=255,
        ) {
            let t2 = t1.saturating_add(bump);
            let img = GrayImage::new(4, 4, data).unwrap();
            let lo = binarize(&img, ThresholdLevel { level: t1 }).count_foreground();
            let hi = binarize(&img, ThresholdLevel { level: t2 }).count_foreground();
            prop_assert!(hi <= lo);
        }
    }
}
