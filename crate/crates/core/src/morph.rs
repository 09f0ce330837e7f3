//! Binary morphology with a flat structuring element.
//!
//! Out-of-bounds pixels read as background for both dilation and erosion,
//! so foreground touching the border erodes. With a symmetric structuring
//! element the usual algebra holds on any mask (open and close are
//! idempotent and increasing, open(x) is a subset of x is a subset of
//! close(x)); close/open duality under complement additionally needs the
//! foreground to stay 2r+1 pixels clear of the border, because
//! complementing turns the padding convention into signal.

use crate::binary::BinaryImage;

/// Flat structuring element: an odd-sided boolean mask anchored at its
/// center cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    size: usize,
    mask: Vec<bool>,
    offsets: Vec<(i64, i64)>,
}

impl StructuringElement {
    /// Panics unless `size` is odd and the mask has `size*size` cells with
    /// at least one set.
    pub fn new(size: usize, mask: Vec<bool>) -> Self {
        assert!(size % 2 == 1, "structuring element size must be odd, got {size}");
        assert_eq!(mask.len(), size * size, "mask length must be size*size");
        assert!(mask.iter().any(|&m| m), "structuring element needs at least one set cell");
        let c = (size / 2) as i64;
        let offsets = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| ((i % size) as i64 - c, (i / size) as i64 - c))
            .collect();
        Self { size, mask, offsets }
    }

    /// All-ones square, the pipeline default at size 3.
    pub fn square(size: usize) -> Self {
        Self::new(size, vec![true; size * size])
    }

    /// Plus-shaped element: the center row and center column.
    pub fn cross(size: usize) -> Self {
        assert!(size % 2 == 1, "structuring element size must be odd, got {size}");
        let c = size / 2;
        let mask = (0..size * size).map(|i| i % size == c || i / size == c).collect();
        Self::new(size, mask)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.size / 2, self.size / 2)
    }

    /// Set cells as (dx, dy) offsets from the origin.
    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }
}

/// Output pixel is foreground iff the element centered there covers at
/// least one in-bounds foreground pixel.
pub fn dilate(bw: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    apply(bw, se, |bw, x, y, offs| offs.iter().any(|&(dx, dy)| bw.get(x + dx, y + dy)))
}

/// Output pixel is foreground iff the element centered there covers only
/// in-bounds foreground pixels.
pub fn erode(bw: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    apply(bw, se, |bw, x, y, offs| offs.iter().all(|&(dx, dy)| bw.get(x + dx, y + dy)))
}

pub fn morph_close(bw: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    erode(&dilate(bw, se), se)
}

pub fn morph_open(bw: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    dilate(&erode(bw, se), se)
}

fn apply(
    bw: &BinaryImage,
    se: &StructuringElement,
    probe: impl Fn(&BinaryImage, i64, i64, &[(i64, i64)]) -> bool,
) -> BinaryImage {
    let mut data = Vec::with_capacity(bw.width() as usize * bw.height() as usize);
    for y in 0..bw.height() as i64 {
        for x in 0..bw.width() as i64 {
            data.push(probe(bw, x, y, se.offsets()));
        }
    }
    BinaryImage::new(bw.width(), bw.height(), data).expect("dimensions preserved")
}
