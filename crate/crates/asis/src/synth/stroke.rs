//! Stroke rasterization onto a per-instance scratch canvas.

use crate::raster::{rasterize_polygon, BinaryMask};

/// One instance's pixel footprint while a scene is being drawn.
pub(crate) struct Scratch {
    pub w: u32,
    pub h: u32,
    pub bits: Vec<bool>,
}

impl Scratch {
    pub fn new(w: u32, h: u32) -> Self {
        Scratch { w, h, bits: vec![false; (w * h) as usize] }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn set(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && x < self.w as i64 && y < self.h as i64 {
            self.bits[(y as u32 * self.w + x as u32) as usize] = true;
        }
    }

    /// Capsule: all pixels within `width/2` of segment a-b.
    pub fn capsule(&mut self, a: (f64, f64), b: (f64, f64), width: f64) {
        let r = width / 2.0;
        let x0 = (a.0.min(b.0) - r).floor() as i64;
        let x1 = (a.0.max(b.0) + r).ceil() as i64;
        let y0 = (a.1.min(b.1) - r).floor() as i64;
        let y1 = (a.1.max(b.1) + r).ceil() as i64;
        let (vx, vy) = (b.0 - a.0, b.1 - a.1);
        let len2 = vx * vx + vy * vy;
        for y in y0.max(0)..=y1.min(self.h as i64 - 1) {
            for x in x0.max(0)..=x1.min(self.w as i64 - 1) {
                let (px, py) = (x as f64 - a.0, y as f64 - a.1);
                let t = if len2 == 0.0 { 0.0 } else { ((px * vx + py * vy) / len2).clamp(0.0, 1.0) };
                let dx = px - t * vx;
                let dy = py - t * vy;
                if dx * dx + dy * dy <= r * r {
                    self.set(x, y);
                }
            }
        }
    }

    /// Stroke a polyline at constant width.
    pub fn polyline(&mut self, pts: &[(f64, f64)], width: f64) {
        if pts.len() == 1 {
            self.capsule(pts[0], pts[0], width);
            return;
        }
        for seg in pts.windows(2) {
            self.capsule(seg[0], seg[1], width);
        }
    }

    /// Fill a polygon (even-odd) into the scratch.
    pub fn polygon(&mut self, poly: &[(f64, f64)]) {
        let mask = rasterize_polygon(poly, self.w, self.h);
        for (slot, &b) in self.bits.iter_mut().zip(mask.bits()) {
            *slot |= b;
        }
    }

    pub fn into_mask(self) -> BinaryMask {
        BinaryMask::from_bits(self.w, self.h, self.bits).expect("scratch dims consistent")
    }
}

pub(crate) fn rotate(dir: (f64, f64), angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (dir.0 * c - dir.1 * s, dir.0 * s + dir.1 * c)
}
