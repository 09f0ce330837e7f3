//! The composed per-image pipeline and the render-back rasterizer.
//!
//! Stage order is fixed: grayscale, Otsu, binarize, small-component
//! removal, morphological close, morphological open, hole fill,
//! large-component selection, outer-contour trace. Each stage's output is
//! exactly the next stage's input; [`vectorize_image_staged`] exposes the
//! intermediates so the composition is externally checkable.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::binary::{area_open, fill_holes, BinaryImage, Connectivity};
use crate::contour::{trace_outer_contours, Polygon};
use crate::morph::{morph_close, morph_open, StructuringElement};
use crate::raster::{to_grayscale, GrayImage, RgbImage};
use crate::threshold::{binarize, otsu_threshold, ThresholdLevel};

/// Mosaic edge length the default area thresholds were tuned for.
const REFERENCE_EDGE: u128 = 7000;

/// Knobs of the per-image pipeline. The defaults (300 px pre-filter,
/// 10000 px post-filter, 3x3 element, 8-connectivity) assume imagery near
/// 7000x7000; see [`PipelineConfig::scaled_for`] for smaller inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub min_area_pre: usize,
    pub min_area_post: usize,
    pub se_size: usize,
    pub connectivity: Connectivity,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_area_pre: 300,
            min_area_post: 10000,
            se_size: 3,
            connectivity: Connectivity::Eight,
        }
    }
}

impl PipelineConfig {
    /// Rescale the two area thresholds by image_area / 7000^2, rounding up
    /// and never below one pixel. The structuring element and connectivity
    /// are resolution-independent and stay put.
    pub fn scaled_for(&self, width: u32, height: u32) -> PipelineConfig {
        let area = width as u128 * height as u128;
        let scale = |v: usize| -> usize {
            let reference = REFERENCE_EDGE * REFERENCE_EDGE;
            let scaled = (v as u128 * area + reference - 1) / reference;
            scaled.max(1) as usize
        };
        PipelineConfig {
            min_area_pre: scale(self.min_area_pre),
            min_area_post: scale(self.min_area_post),
            se_size: self.se_size,
            connectivity: self.connectivity,
        }
    }
}

/// Vector output for one image: one polygon per surviving component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorScene {
    pub width: u32,
    pub height: u32,
    pub polygons: Vec<Polygon>,
    pub threshold_used: ThresholdLevel,
    pub source_name: String,
}

/// Every intermediate of one pipeline run, in execution order.
#[derive(Debug, Clone)]
pub struct PipelineStages {
    pub gray: GrayImage,
    pub threshold: ThresholdLevel,
    pub binarized: BinaryImage,
    pub small_removed: BinaryImage,
    pub closed: BinaryImage,
    pub opened: BinaryImage,
    pub filled: BinaryImage,
    pub large_only: BinaryImage,
    pub polygons: Vec<Polygon>,
}

/// Run the pipeline keeping every intermediate mask.
pub fn vectorize_image_staged(img: &RgbImage, cfg: &PipelineConfig) -> PipelineStages {
    let se = StructuringElement::square(cfg.se_size);
    let gray = to_grayscale(img);
    let threshold = otsu_threshold(&gray);
    let binarized = binarize(&gray, threshold);
    let small_removed = area_open(&binarized, cfg.min_area_pre, cfg.connectivity);
    let closed = morph_close(&small_removed, &se);
    let opened = morph_open(&closed, &se);
    let filled = fill_holes(&opened);
    let large_only = area_open(&filled, cfg.min_area_post, cfg.connectivity);
    let polygons = trace_outer_contours(&large_only);
    PipelineStages {
        gray,
        threshold,
        binarized,
        small_removed,
        closed,
        opened,
        filled,
        large_only,
        polygons,
    }
}

/// Raster to vector in one call. The returned scene's `source_name` is
/// empty; callers that know the origin fill it in before serialization.
pub fn vectorize_image(img: &RgbImage, cfg: &PipelineConfig) -> VectorScene {
    let stages = vectorize_image_staged(img, cfg);
    VectorScene {
        width: img.width(),
        height: img.height(),
        polygons: stages.polygons,
        threshold_used: stages.threshold,
        source_name: String::new(),
    }
}

/// Render polygons back to a mask: boundary pixels plus everything they
/// enclose, unioned over polygons.
///
/// Fill works per polygon on its padded bounding box: mark the boundary
/// ring, flood 4-connected from the pad frame, and keep whatever the flood
/// cannot reach. Unlike even-odd scan-line filling this is exact for
/// pinched and single-pixel-wide rings, which Moore traces produce freely.
pub fn rasterize(scene: &VectorScene) -> BinaryImage {
    let mut out = BinaryImage::filled(scene.width, scene.height, false);
    for poly in &scene.polygons {
        if poly.points.is_empty() {
            continue;
        }
        let x0 = poly.points.iter().map(|p| p.x).min().unwrap().min(scene.width - 1);
        let y0 = poly.points.iter().map(|p| p.y).min().unwrap().min(scene.height - 1);
        let x1 = poly.points.iter().map(|p| p.x).max().unwrap().min(scene.width - 1);
        let y1 = poly.points.iter().map(|p| p.y).max().unwrap().min(scene.height - 1);
        // Local grid covers the bbox plus a one-cell pad frame, so the
        // outside flood can wrap around the ring.
        let gw = (x1 - x0) as usize + 3;
        let gh = (y1 - y0) as usize + 3;
        let mut boundary = vec![false; gw * gh];
        for p in &poly.points {
            if p.x < scene.width && p.y < scene.height {
                let gx = (p.x - x0) as usize + 1;
                let gy = (p.y - y0) as usize + 1;
                boundary[gy * gw + gx] = true;
            }
        }
        let mut outside = vec![false; gw * gh];
        let mut queue = VecDeque::from([0usize]);
        outside[0] = true;
        while let Some(i) = queue.pop_front() {
            let (gx, gy) = (i % gw, i / gw);
            let mut push = |nx: usize, ny: usize, queue: &mut VecDeque<usize>| {
                let ni = ny * gw + nx;
                if !outside[ni] && !boundary[ni] {
                    outside[ni] = true;
                    queue.push_back(ni);
                }
            };
            if gx > 0 {
                push(gx - 1, gy, &mut queue);
            }
            if gx + 1 < gw {
                push(gx + 1, gy, &mut queue);
            }
            if gy > 0 {
                push(gx, gy - 1, &mut queue);
            }
            if gy + 1 < gh {
                push(gx, gy + 1, &mut queue);
            }
        }
        for gy in 1..gh - 1 {
            for gx in 1..gw - 1 {
                if !outside[gy * gw + gx] {
                    out.set(x0 + gx as u32 - 1, y0 + gy as u32 - 1, true);
                }
            }
        }
    }
    out
}

/// The scene's rasterized mask as a grayscale PNG: foreground 255,
/// background 0. Every render path uses this one encoder so renders of
/// equal scenes are byte-identical.
pub fn render_png(scene: &VectorScene) -> Vec<u8> {
    let mask = rasterize(scene);
    let mut data = Vec::with_capacity(mask.width() as usize * mask.height() as usize);
    for y in 0..mask.height() as i64 {
        for x in 0..mask.width() as i64 {
            data.push(if mask.get(x, y) { 255 } else { 0 });
        }
    }
    let gray = crate::raster::GrayImage::new(mask.width(), mask.height(), data)
        .expect("mask dimensions are valid image dimensions");
    crate::raster::encode_png_gray(&gray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scene_of(bw: &BinaryImage) -> VectorScene {
        VectorScene {
            width: bw.width(),
            height: bw.height(),
            polygons: trace_outer_contours(bw),
            threshold_used: ThresholdLevel { level: 0 },
            source_name: String::new(),
        }
    }

    #[test]
    fn default_config_matches_reference_resolution() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.min_area_pre, 300);
        assert_eq!(cfg.min_area_post, 10000);
        assert_eq!(cfg.se_size, 3);
        assert_eq!(cfg.connectivity, Connectivity::Eight);
        assert_eq!(cfg.scaled_for(7000, 7000), cfg);
    }

    #[test]
    fn scaled_config_pinned_values() {
        let cfg = PipelineConfig::default();
        let at_1024 = cfg.scaled_for(1024, 1024);
        assert_eq!((at_1024.min_area_pre, at_1024.min_area_post), (7, 214));
        let tiny = cfg.scaled_for(8, 8);
        assert_eq!((tiny.min_area_pre, tiny.min_area_post), (1, 1));
    }

    #[test]
    fn rasterize_empty_scene() {
        let scene = VectorScene {
            width: 5,
            height: 4,
            polygons: vec![],
            threshold_used: ThresholdLevel { level: 0 },
            source_name: String::new(),
        };
        assert_eq!(rasterize(&scene).count_foreground(), 0);
    }

    #[test]
    fn rasterize_round_trips_solid_block() {
        let mut bw = BinaryImage::filled(6, 6, false);
        for y in 1..4 {
            for x in 2..5 {
                bw.set(x, y, true);
            }
        }
        assert_eq!(rasterize(&scene_of(&bw)), bw);
    }

    #[test]
    fn rasterize_round_trips_single_pixel_and_diagonal() {
        let mut single = BinaryImage::filled(3, 3, false);
        single.set(2, 0, true);
        assert_eq!(rasterize(&scene_of(&single)), single);

        let mut diag = BinaryImage::filled(4, 4, false);
        diag.set(1, 1, true);
        diag.set(2, 2, true);
        assert_eq!(rasterize(&scene_of(&diag)), diag);
    }

    #[test]
    fn rasterize_round_trips_random_hole_free_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for case in 0..40 {
            let data = (0..24 * 24).map(|_| rng.gen_bool(0.5)).collect();
            let bw = fill_holes(&BinaryImage::new(24, 24, data).unwrap());
            assert_eq!(rasterize(&scene_of(&bw)), bw, "case {case}");
        }
    }

    #[test]
    fn rasterize_fills_untraced_holes() {
        // Outer contours ignore interior boundaries, so a ring renders back
        // as its filled version.
        let mut ring = BinaryImage::filled(7, 7, false);
        for i in 1..=5u32 {
            ring.set(i, 1, true);
            ring.set(i, 5, true);
            ring.set(1, i, true);
            ring.set(5, i, true);
        }
        assert_eq!(rasterize(&scene_of(&ring)), fill_holes(&ring));
    }

    #[test]
    fn all_black_image_gives_empty_scene() {
        let img = RgbImage::new(16, 16, vec![0; 16 * 16 * 3]).unwrap();
        let scene = vectorize_image(&img, &PipelineConfig::default());
        assert!(scene.polygons.is_empty());
        assert_eq!(scene.threshold_used.level, 0);
        assert_eq!((scene.width, scene.height), (16, 16));
    }

    #[test]
    fn bright_block_on_noise_yields_exactly_its_outline() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let (w, h) = (512u32, 512u32);
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for _ in 0..w * h {
            let v: u8 = rng.gen_range(0..40);
            data.extend_from_slice(&[v, v, v]);
        }
        let mut img_data = data;
        for y in 150..350u32 {
            for x in 150..350u32 {
                let i = ((y * w + x) * 3) as usize;
                img_data[i] = 220;
                img_data[i + 1] = 220;
                img_data[i + 2] = 220;
            }
        }
        let img = RgbImage::new(w, h, img_data).unwrap();
        let cfg = PipelineConfig {
            min_area_pre: 50,
            min_area_post: 1000,
            ..PipelineConfig::default()
        };
        let scene = vectorize_image(&img, &cfg);
        assert_eq!(scene.polygons.len(), 1);
        assert_eq!(scene.polygons[0].area_px, 200 * 200);
        // The outline is the block's perimeter ring.
        let points: std::collections::BTreeSet<Point> =
            scene.polygons[0].points.iter().copied().collect();
        assert_eq!(points.len(), 4 * 200 - 4);
        assert!(points.contains(&Point { x: 150, y: 150 }));
        assert!(points.contains(&Point { x: 349, y: 349 }));
        assert!(!points.contains(&Point { x: 200, y: 200 }));
    }

    #[test]
    fn composed_equals_manual_stages() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..3 {
            let data: Vec<u8> = (0..64 * 64 * 3).map(|_| rng.gen()).collect();
            let img = RgbImage::new(64, 64, data).unwrap();
            let cfg = PipelineConfig {
                min_area_pre: 4,
                min_area_post: 12,
                ..PipelineConfig::default()
            };

            let se = StructuringElement::square(cfg.se_size);
            let gray = to_grayscale(&img);
            let t = otsu_threshold(&gray);
            let bw = binarize(&gray, t);
            let pre = area_open(&bw, cfg.min_area_pre, cfg.connectivity);
            let closed = morph_close(&pre, &se);
            let opened = morph_open(&closed, &se);
            let filled = fill_holes(&opened);
            let post = area_open(&filled, cfg.min_area_post, cfg.connectivity);
            let polygons = trace_outer_contours(&post);

            let stages = vectorize_image_staged(&img, &cfg);
            assert_eq!(stages.threshold, t);
            assert_eq!(stages.binarized, bw);
            assert_eq!(stages.small_removed, pre);
            assert_eq!(stages.closed, closed);
            assert_eq!(stages.opened, opened);
            assert_eq!(stages.filled, filled);
            assert_eq!(stages.large_only, post);
            assert_eq!(stages.polygons, polygons);

            let scene = vectorize_image(&img, &cfg);
            assert_eq!(scene.polygons, polygons);
            assert_eq!(scene.threshold_used, t);
        }
    }

    #[test]
    fn pipeline_output_rasterizes_to_final_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let data: Vec<u8> = (0..48 * 48 * 3).map(|_| rng.gen()).collect();
        let img = RgbImage::new(48, 48, data).unwrap();
        let cfg = PipelineConfig { min_area_pre: 3, min_area_post: 8, ..PipelineConfig::default() };
        let stages = vectorize_image_staged(&img, &cfg);
        let scene = VectorScene {
            width: 48,
            height: 48,
            polygons: stages.polygons.clone(),
            threshold_used: stages.threshold,
            source_name: String::new(),
        };
        assert_eq!(rasterize(&scene), stages.large_only);
    }

    #[test]
    fn canonical_config_json_shape() {
        let cfg = PipelineConfig::default();
        assert_eq!(
            serde_json::to_string(&cfg).unwrap(),
            r#"{"min_area_pre":300,"min_area_post":10000,"se_size":3,"connectivity":8}"#
        );
        let back: PipelineConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
