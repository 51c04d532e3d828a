//! Dense 2D label/mask primitives and the geometric reductions built on them.
//!
//! Everything downstream (kernels, affinity maps, graph merge, metrics,
//! scene synthesis) works on these types. All operations here are pure
//! functions over immutable inputs; callers may fan out over images freely.

mod components;
mod edt;
mod geometry;
pub mod io;

pub use components::{connected_components, label_components, Connectivity, LabeledComponents};
pub use edt::distance_transform;
pub use geometry::{
    bounding_box, convex_hull, min_area_rect, point_in_polygon, polygon_area, rasterize_polygon,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Per-pixel membership flag on a fixed grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMask { width, height, bits: vec![false; (width * height) as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != (width as usize) * (height as usize) {
            return Err(Error::Contract(format!(
                "mask bits length {} does not match {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask { width, height, bits }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Row-major (x, y) coordinates of all set pixels.
    pub fn set_pixels(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Dense per-pixel instance labels with an id -> class table.
///
/// Label 0 is background; every nonzero label present in the grid has an
/// entry in the class table. Ids are unique by construction (they are the
/// keys of that table).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    classes: BTreeMap<u32, u32>,
    depth_order: Option<BTreeMap<u32, u32>>,
}

impl InstanceMap {
    pub fn new(
        width: u32,
        height: u32,
        labels: Vec<u32>,
        classes: BTreeMap<u32, u32>,
        depth_order: Option<BTreeMap<u32, u32>>,
    ) -> Result<Self> {
        if labels.len() != (width as usize) * (height as usize) {
            return Err(Error::Contract(format!(
                "labels length {} does not match {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        for &l in &labels {
            if l != 0 && !classes.contains_key(&l) {
                return Err(Error::Contract(format!("label {l} has no class entry")));
            }
        }
        if let Some(depth) = &depth_order {
            for id in classes.keys() {
                if !depth.contains_key(id) {
                    return Err(Error::Contract(format!("instance {id} has no depth entry")));
                }
            }
        }
        Ok(InstanceMap { width, height, labels, classes, depth_order })
    }

    /// Empty (all-background) map.
    pub fn background(width: u32, height: u32) -> Self {
        InstanceMap {
            width,
            height,
            labels: vec![0; (width * height) as usize],
            classes: BTreeMap::new(),
            depth_order: None,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn label(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn classes(&self) -> &BTreeMap<u32, u32> {
        &self.classes
    }

    pub fn depth_order(&self) -> Option<&BTreeMap<u32, u32>> {
        self.depth_order.as_ref()
    }

    pub fn class_of(&self, id: u32) -> Option<u32> {
        self.classes.get(&id).copied()
    }

    /// Instance ids in ascending order.
    pub fn ids(&self) -> Vec<u32> {
        self.classes.keys().copied().collect()
    }

    pub fn instance_count(&self) -> usize {
        self.classes.len()
    }

    /// Number of classes including background class 0.
    pub fn class_count(&self) -> u32 {
        self.classes.values().copied().max().unwrap_or(0) + 1
    }

    /// Mask of one instance.
    pub fn instance_mask(&self, id: u32) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l == id).collect();
        BinaryMask { width: self.width, height: self.height, bits }
    }

    /// Mask of all nonzero labels.
    pub fn foreground_mask(&self) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l != 0).collect();
        BinaryMask { width: self.width, height: self.height, bits }
    }

    /// Visible pixel count per instance id.
    pub fn pixel_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts: BTreeMap<u32, usize> = self.classes.keys().map(|&k| (k, 0)).collect();
        for &l in &self.labels {
            if l != 0 {
                *counts.get_mut(&l).expect("label has class entry") += 1;
            }
        }
        counts
    }
}

/// Per-pixel class probabilities, pixel-major: `probs[(y*W + x)*C + c]`.
#[derive(Debug, Clone)]
pub struct SemanticMap {
    channels: u32,
    width: u32,
    height: u32,
    probs: Vec<f32>,
}

impl SemanticMap {
    pub fn new(channels: u32, width: u32, height: u32, probs: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Parameter("semantic map needs at least one channel".into()));
        }
        let expected = channels as usize * width as usize * height as usize;
        if probs.len() != expected {
            return Err(Error::Contract(format!(
                "probs length {} does not match C={} x {}x{}",
                probs.len(),
                channels,
                width,
                height
            )));
        }
        let map = SemanticMap { channels, width, height, probs };
        for y in 0..height {
            for x in 0..width {
                let s: f32 = map.pixel(x, y).iter().sum();
                if (s - 1.0).abs() > 1e-5 {
                    return Err(Error::Contract(format!(
                        "channel sum {s} at ({x},{y}) not 1"
                    )));
                }
            }
        }
        Ok(map)
    }

    #[inline]
    pub fn channels(&self) -> u32 {
        self.channels
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[f32] {
        let base = ((y * self.width + x) * self.channels) as usize;
        &self.probs[base..base + self.channels as usize]
    }

    /// Argmax channel at a pixel; ties go to the smaller channel id.
    pub fn argmax(&self, x: u32, y: u32) -> u32 {
        let probs = self.pixel(x, y);
        let mut best = 0usize;
        for (c, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = c;
            }
        }
        best as u32
    }

    pub fn same_dims_as_map(&self, map: &InstanceMap) -> bool {
        self.width == map.width && self.height == map.height
    }
}

/// Oriented rectangle; `extents` is (long side, short side) in pixels.
///
/// Extents include the unit pixel footprint (a 20x4 axis-aligned bar of
/// pixels has extents (20, 4), not the (19, 3) span of its centers), so the
/// short side is always >= 1 and the rectangle area covers the pixel count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub center: (f64, f64),
    pub extents: (f64, f64),
    /// Direction of the long side, radians in [0, pi).
    pub angle: f64,
}

impl RotatedRect {
    pub fn area(&self) -> f64 {
        self.extents.0 * self.extents.1
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.extents.0 / self.extents.1
    }
}
