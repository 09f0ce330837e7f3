//! Binary masks and connected-component machinery: labeling, area opening
//! ("bwareaopen"), and hole filling ("imfill").
//!
//! Foreground connectivity is a parameter (the pipeline uses 8); hole
//! filling always treats background as 4-connected, the complement of
//! 8-connected foreground.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::raster::RasterError;

/// Boolean raster, row-major; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroDimension);
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(RasterError::DataLength { expected, actual: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        assert!(width > 0 && height > 0, "zero-dimension mask");
        Self { width, height, data: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    /// Signed coordinates; out-of-bounds reads as background.
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// True when `self`'s foreground is a subset of `other`'s.
    pub fn subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn complement(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| !v).collect(),
        }
    }
}

/// Pixel adjacency rule. Eight includes diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

// On the wire and in config files connectivity is the plain number 4 or 8.
impl Serialize for Connectivity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n: u8 = match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        };
        serializer.serialize_u8(n)
    }
}

impl<'de> Deserialize<'de> for Connectivity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match u8::deserialize(deserializer)? {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(D::Error::custom(format!("connectivity must be 4 or 8, got {other}"))),
        }
    }
}

/// Dense per-pixel component labels: 0 is background, components are
/// numbered 1..=K in row-major first-encounter order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    component_sizes: Vec<usize>,
}

impl LabelMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: u32, y: u32) -> u32 {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of bounds");
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    /// Pixel counts indexed by label-1.
    pub fn component_sizes(&self) -> &[usize] {
        &self.component_sizes
    }
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            // Path halving keeps the trees shallow without recursion.
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Label maximal connected foreground regions. Two passes over the mask:
/// union-find merging, then dense relabeling in row-major first-encounter
/// order.
pub fn label_components(bw: &BinaryImage, connectivity: Connectivity) -> LabelMap {
    let (w, h) = (bw.width as usize, bw.height as usize);
    let mut ds = DisjointSet::new(w * h);
    // Only neighbors already visited in row-major order need merging.
    let back_offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1)],
    };
    for y in 0..h {
        for x in 0..w {
            if !bw.data[y * w + x] {
                continue;
            }
            for &(dx, dy) in back_offsets {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if bw.get(nx, ny) {
                    ds.union((y * w + x) as u32, (ny as usize * w + nx as usize) as u32);
                }
            }
        }
    }
    let mut labels = vec![0u32; w * h];
    let mut component_sizes = Vec::new();
    let mut root_to_label = vec![0u32; w * h];
    for i in 0..w * h {
        if !bw.data[i] {
            continue;
        }
        let root = ds.find(i as u32) as usize;
        if root_to_label[root] == 0 {
            component_sizes.push(0);
            root_to_label[root] = component_sizes.len() as u32;
        }
        let label = root_to_label[root];
        labels[i] = label;
        component_sizes[label as usize - 1] += 1;
    }
    LabelMap { width: bw.width, height: bw.height, labels, component_sizes }
}

/// Remove connected components smaller than `min_area` pixels; components
/// with exactly `min_area` pixels survive.
pub fn area_open(bw: &BinaryImage, min_area: usize, connectivity: Connectivity) -> BinaryImage {
    let map = label_components(bw, connectivity);
    let keep: Vec<bool> = map.component_sizes.iter().map(|&s| s >= min_area).collect();
    let data = map
        .labels
        .iter()
        .map(|&l| l != 0 && keep[l as usize - 1])
        .collect();
    BinaryImage { width: bw.width, height: bw.height, data }
}

/// Turn enclosed background into foreground: a background pixel survives
/// only if it reaches the image border through 4-connected background.
pub fn fill_holes(bw: &BinaryImage) -> BinaryImage {
    let (w, h) = (bw.width as usize, bw.height as usize);
    // Union-find over background pixels plus one virtual outside node.
    let outside = (w * h) as u32;
    let mut ds = DisjointSet::new(w * h + 1);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if bw.data[i] {
                continue;
            }
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                ds.union(i as u32, outside);
            }
            if x + 1 < w && !bw.data[i + 1] {
                ds.union(i as u32, (i + 1) as u32);
            }
            if y + 1 < h && !bw.data[i + w] {
                ds.union(i as u32, (i + w) as u32);
            }
        }
    }
    let outside_root = ds.find(outside);
    let mut data = vec![false; w * h];
    for i in 0..w * h {
        data[i] = bw.data[i] || ds.find(i as u32) != outside_root;
    }
    BinaryImage { width: bw.width, height: bw.height, data }
}
