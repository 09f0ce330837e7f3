//! Outer-boundary extraction: Moore-neighbor border following around each
//! 8-connected foreground component.
//!
//! Tracing starts at a component's first pixel in row-major order with the
//! backtrack pointing west, and walks the 8-neighborhood clockwise (y
//! grows downward). The walk stops when it is back at the start pixel AND
//! about to repeat its first outgoing transition; stopping on the pixel
//! alone would terminate 2-pixel components one step early, and stopping
//! on pixel+backtrack alone never fires for some shapes. Only outer
//! boundaries are produced; the pipeline fills holes before tracing.

use thiserror::Error;

use crate::binary::{label_components, BinaryImage, Connectivity, LabelMap};

/// Pixel coordinates, y down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

/// Closed boundary ring of one component: consecutive points are
/// 8-neighbors, the last point connects back to the first, orientation is
/// clockwise in image coordinates. Pixels may repeat where the boundary
/// pinches to one pixel wide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polygon {
    pub points: Vec<Point>,
    pub component_id: u32,
    pub area_px: usize,
}

#[derive(Debug, Error)]
pub enum ContourError {
    #[error("polygon point ({x},{y}) does not lie on a single foreground component of the mask")]
    MismatchedSource { x: u32, y: u32 },
}

/// Clockwise 8-neighborhood ring in y-down coordinates, starting west.
const RING: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// From pixel `c` with backtrack cell `b` (an 8-neighbor of `c`, always
/// background), scan the ring clockwise starting just past `b`; the first
/// foreground cell is the next boundary pixel, and the cell scanned just
/// before it becomes the new backtrack. Returns None for an isolated pixel.
fn next_move(bw: &BinaryImage, c: (i64, i64), b: (i64, i64)) -> Option<((i64, i64), (i64, i64))> {
    let rel = (b.0 - c.0, b.1 - c.1);
    let ib = RING.iter().position(|&o| o == rel).expect("backtrack is an 8-neighbor");
    for step in 1..=8 {
        let i = (ib + step) % 8;
        let cell = (c.0 + RING[i].0, c.1 + RING[i].1);
        if bw.get(cell.0, cell.1) {
            let prev = RING[(i + 7) % 8];
            return Some((cell, (c.0 + prev.0, c.1 + prev.1)));
        }
    }
    None
}

fn moore_trace(bw: &BinaryImage, start: (u32, u32)) -> Vec<Point> {
    let s = (start.0 as i64, start.1 as i64);
    let mut points = vec![Point { x: start.0, y: start.1 }];
    // The west cell is background: anything west of the first row-major
    // pixel would be 4-adjacent and therefore part of the same component.
    let b0 = (s.0 - 1, s.1);
    let first = match next_move(bw, s, b0) {
        Some(t) => t,
        None => return points,
    };
    let (mut cur, mut b) = first;
    // Each walk state is visited at most once per cycle, so 8*w*h steps is
    // a hard ceiling; exceeding it means the walk lost the boundary.
    let limit = 8 * bw.width() as usize * bw.height() as usize + 8;
    for _ in 0..limit {
        if cur == s && next_move(bw, cur, b) == Some(first) {
            return points;
        }
        points.push(Point { x: cur.0 as u32, y: cur.1 as u32 });
        let (ncur, nb) = next_move(bw, cur, b).expect("boundary walk cannot dead-end");
        cur = ncur;
        b = nb;
    }
    unreachable!("contour trace exceeded its state bound");
}

/// Trace the outer boundary of every 8-connected foreground component, in
/// first-encounter order. `component_id` is the dense 1-based label; the
/// component's pixel count lands in `area_px`.
pub fn trace_outer_contours(bw: &BinaryImage) -> Vec<Polygon> {
    let map = label_components(bw, Connectivity::Eight);
    let k = map.component_count();
    let mut first_pixel: Vec<Option<(u32, u32)>> = vec![None; k];
    for y in 0..bw.height() {
        for x in 0..bw.width() {
            let label = map.label(x, y);
            if label != 0 && first_pixel[label as usize - 1].is_none() {
                first_pixel[label as usize - 1] = Some((x, y));
            }
        }
    }
    first_pixel
        .iter()
        .enumerate()
        .map(|(i, start)| {
            let start = start.expect("every component has a first pixel");
            Polygon {
                points: moore_trace(bw, start),
                component_id: i as u32 + 1,
                area_px: map.component_sizes()[i],
            }
        })
        .collect()
}

/// Pixel count of the component `p` was traced from, recomputed from the
/// mask's label map.
pub fn polygon_pixel_area(p: &Polygon, bw: &BinaryImage) -> Result<usize, ContourError> {
    let map: LabelMap = label_components(bw, Connectivity::Eight);
    let mut component = 0u32;
    for pt in &p.points {
        let inside = pt.x < bw.width() && pt.y < bw.height();
        let label = if inside { map.label(pt.x, pt.y) } else { 0 };
        if label == 0 || (component != 0 && label != component) {
            return Err(ContourError::MismatchedSource { x: pt.x, y: pt.y });
        }
        component = label;
    }
    match component {
        0 => Err(ContourError::MismatchedSource { x: 0, y: 0 }),
        l => Ok(map.component_sizes()[l as usize - 1]),
    }
}
