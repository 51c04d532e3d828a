//! Per-family instance geometry.
//!
//! Each generator draws one instance onto a scratch canvas using its own
//! RNG stream, so instances are independent of draw order. Shapes are tuned
//! for the statistical signatures the suite checks (bounding-box crowding
//! for wires, extreme aspect ratios for logs, heavy fragmentation for
//! fences) rather than visual fidelity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::stroke::{rotate, Scratch};
use super::{FamilyParams, ShapeFamily};

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        return range.0;
    }
    rng.gen_range(range.0..range.1)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniform draws
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub(crate) struct InstanceBrush {
    pub family: ShapeFamily,
    pub canvas: (u32, u32),
    pub stroke_width: (f64, f64),
    pub params: FamilyParams,
    /// Shared per-scene context (base orientation for families that align).
    pub scene_angle: f64,
}

impl InstanceBrush {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Scratch {
        let (w, h) = self.canvas;
        let mut scratch = Scratch::new(w, h);
        match self.family {
            ShapeFamily::Wire => self.wire(rng, &mut scratch),
            ShapeFamily::Antenna => self.antenna(rng, &mut scratch),
            ShapeFamily::Hanger => self.hanger(rng, &mut scratch),
            ShapeFamily::Fence => self.fence(rng, &mut scratch),
            ShapeFamily::Log => self.log(rng, &mut scratch),
            ShapeFamily::Branch => self.branch(rng, &mut scratch),
        }
        scratch
    }

    fn scale(&self) -> f64 {
        self.canvas.0.min(self.canvas.1) as f64
    }

    /// Smooth open curve: a random walk with damped curvature, stroked at a
    /// sampled width. Starts on one border and walks until it leaves.
    fn wire(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let width = uniform(rng, self.stroke_width);
        for _attempt in 0..8 {
            let (start, inward) = border_start(rng, w, h);
            let mut heading = inward + uniform(rng, (-0.5, 0.5));
            let mut kappa = 0.0f64;
            let mut p = start;
            let mut pts = vec![p];
            let step = 2.0;
            let margin = width + 2.0;
            for _ in 0..(4.0 * s) as usize {
                kappa = 0.92 * kappa + gauss(rng) * self.params.wire_waviness;
                kappa = kappa.clamp(-0.11, 0.11);
                heading += kappa * step;
                p = (p.0 + step * heading.cos(), p.1 + step * heading.sin());
                pts.push(p);
                if p.0 < -margin || p.1 < -margin || p.0 > w + margin || p.1 > h + margin {
                    break;
                }
            }
            let arclen = (pts.len() - 1) as f64 * step;
            if arclen >= 0.6 * s {
                scratch.polyline(&pts, width);
                return;
            }
        }
        // last resort: a straight diagonal so the instance is never empty
        scratch.polyline(&[(0.0, 0.0), (w, h)], width);
    }

    /// Near-straight thin rod with up to two slight bends. Rod directions
    /// cluster around the scene angle and its perpendicular, the way rods
    /// criss-cross in a bin.
    fn antenna(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let width = uniform(rng, self.stroke_width);
        let perp = if rng.gen_bool(0.5) { std::f64::consts::FRAC_PI_2 } else { 0.0 };
        let mut theta = self.scene_angle + perp + gauss(rng) * 0.12;
        let total_len = uniform(rng, (0.9, 1.5)) * s;
        let center = (uniform(rng, (0.1 * w, 0.9 * w)), uniform(rng, (0.1 * h, 0.9 * h)));
        let bends = rng.gen_range(0..=2u32);
        let seg_count = bends + 1;
        let seg_len = total_len / seg_count as f64;
        let mut p = (
            center.0 - (total_len / 2.0) * theta.cos(),
            center.1 - (total_len / 2.0) * theta.sin(),
        );
        let mut pts = vec![p];
        for _ in 0..seg_count {
            p = (p.0 + seg_len * theta.cos(), p.1 + seg_len * theta.sin());
            pts.push(p);
            theta += uniform(rng, (-0.09, 0.09));
        }
        scratch.polyline(&pts, width);
    }

    /// Hook-plus-triangle template under a random similarity transform.
    fn hanger(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let width = uniform(rng, self.stroke_width);
        let size = uniform(rng, (0.5, 0.8)) * s;
        let rot = uniform(rng, (0.0, std::f64::consts::TAU));
        let cx = uniform(rng, (0.18 * w, 0.82 * w));
        let cy = uniform(rng, (0.18 * h, 0.82 * h));
        let place = |p: (f64, f64)| -> (f64, f64) {
            let r = rotate(p, rot);
            (cx + r.0 * size, cy + r.1 * size)
        };
        // shoulders and bottom bar
        let left = (-0.5, 0.25);
        let right = (0.5, 0.25);
        let apex = (0.0, -0.2);
        scratch.polyline(&[place(left), place(apex), place(right)], width);
        scratch.polyline(&[place(left), place(right)], width);
        // stem
        scratch.polyline(&[place(apex), place((0.0, -0.28))], width);
        // hook: open arc above the stem
        let hook_c = (0.0, -0.37);
        let hook_r = 0.09;
        let mut arc = Vec::new();
        let a0 = std::f64::consts::FRAC_PI_2;
        let sweep = 1.55 * std::f64::consts::PI;
        for i in 0..=14 {
            let a = a0 + sweep * (i as f64 / 14.0);
            arc.push(place((hook_c.0 + hook_r * a.cos(), hook_c.1 + hook_r * a.sin())));
        }
        scratch.polyline(&arc, width);
    }

    /// Full-canvas square lattice. All lattices of a scene share the scene
    /// angle (up to a small jitter) with independent pitch and phase, so
    /// different instances cut each other near-perpendicularly.
    fn fence(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let width = uniform(rng, self.stroke_width);
        let theta = self.scene_angle + gauss(rng) * 0.02;
        let pitch = uniform(rng, self.params.fence_pitch) * s;
        let diag = (w * w + h * h).sqrt();
        let center = (w / 2.0, h / 2.0);
        for dir_idx in 0..2 {
            let ang = theta + dir_idx as f64 * std::f64::consts::FRAC_PI_2;
            let u = (ang.cos(), ang.sin());
            let v = (-u.1, u.0);
            let phase = uniform(rng, (0.0, pitch));
            let k_max = (diag / (2.0 * pitch)).ceil() as i64 + 1;
            for k in -k_max..=k_max {
                let offset = k as f64 * pitch + phase;
                let base = (center.0 + v.0 * offset, center.1 + v.1 * offset);
                let a = (base.0 - u.0 * diag, base.1 - u.1 * diag);
                let b = (base.0 + u.0 * diag, base.1 + u.1 * diag);
                scratch.capsule(a, b, width);
            }
        }
    }

    /// Long tapered quadrilateral; per-instance scale spans a wide range to
    /// mimic perspective. Log directions cluster around the scene angle.
    fn log(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let persp = uniform(rng, self.params.log_scale_range);
        let theta = self.scene_angle + gauss(rng) * 0.22;
        let len = uniform(rng, (0.9, 1.6)) * s * persp;
        let width = uniform(rng, (10.0, 18.0)) * persp;
        let taper = uniform(rng, (0.7, 1.0));
        let c = (uniform(rng, (0.1 * w, 0.9 * w)), uniform(rng, (0.1 * h, 0.9 * h)));
        let u = (theta.cos(), theta.sin());
        let v = (-u.1, u.0);
        let half = len / 2.0;
        let w0 = width / 2.0;
        let w1 = width * taper / 2.0;
        let quad = [
            (c.0 - u.0 * half - v.0 * w0, c.1 - u.1 * half - v.1 * w0),
            (c.0 - u.0 * half + v.0 * w0, c.1 - u.1 * half + v.1 * w0),
            (c.0 + u.0 * half + v.0 * w1, c.1 + u.1 * half + v.1 * w1),
            (c.0 + u.0 * half - v.0 * w1, c.1 + u.1 * half - v.1 * w1),
        ];
        scratch.polygon(&quad);
        // round the butt ends a little so thin logs stay connected
        scratch.capsule(
            (c.0 - u.0 * half, c.1 - u.1 * half),
            (c.0 + u.0 * half, c.1 + u.1 * half),
            width.min(3.0),
        );
    }

    /// Recursive binary tree of tapering strokes rooted on a border.
    fn branch(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) {
        let s = self.scale();
        let (w, h) = (self.canvas.0 as f64, self.canvas.1 as f64);
        let (start, inward) = border_start(rng, w, h);
        let dir = rotate((inward.cos(), inward.sin()), uniform(rng, (-0.3, 0.3)));
        let len = 0.30 * s;
        let width = uniform(rng, (7.0, 9.5));
        self.grow(rng, scratch, start, dir, len, width, self.params.branch_depth);
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &self,
        rng: &mut ChaCha8Rng,
        scratch: &mut Scratch,
        p: (f64, f64),
        dir: (f64, f64),
        len: f64,
        width: f64,
        depth: u32,
    ) {
        let q = (p.0 + dir.0 * len, p.1 + dir.1 * len);
        scratch.capsule(p, q, width);
        if depth == 0 || width < 2.4 {
            return;
        }
        let spread = uniform(rng, (0.35, 0.55));
        for side in [-1.0, 1.0] {
            let child_dir = rotate(dir, side * spread + gauss(rng) * 0.08);
            self.grow(rng, scratch, q, child_dir, len * 0.72, width * 0.72, depth - 1);
        }
    }
}

/// Random point on the canvas border plus the inward normal direction.
fn border_start(rng: &mut ChaCha8Rng, w: f64, h: f64) -> ((f64, f64), f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    match rng.gen_range(0..4u32) {
        0 => ((uniform(rng, (0.0, w)), 0.0), FRAC_PI_2),
        1 => ((uniform(rng, (0.0, w)), h - 1.0), -FRAC_PI_2),
        2 => ((0.0, uniform(rng, (0.0, h))), 0.0),
        _ => ((w - 1.0, uniform(rng, (0.0, h))), PI),
    }
}
