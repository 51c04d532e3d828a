//! Geometric reductions of binary masks: boxes, hulls, oriented rectangles,
//! and polygon rasterization.
//!
//! Hulls and rectangles are computed on pixel centers (integer coordinates).
//! Rectangle extents are inflated by one pixel per axis so they describe the
//! pixel footprint rather than the center span; see [`super::RotatedRect`].

use super::{BinaryMask, RotatedRect};
use crate::error::{Error, Result};

/// Tightest axis-aligned box (x0, y0, x1, y1), inclusive.
pub fn bounding_box(mask: &BinaryMask) -> Result<(u32, u32, u32, u32)> {
    let mut bbox: Option<(u32, u32, u32, u32)> = None;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                bbox = Some(match bbox {
                    None => (x, y, x, y),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                });
            }
        }
    }
    bbox.ok_or(Error::EmptyMask("bounding_box"))
}

#[inline]
fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of the set-pixel centers, counterclockwise (shoelace > 0),
/// starting from the lexicographically smallest vertex.
///
/// Degenerate inputs yield fewer than 3 vertices: a single point or a
/// 2-vertex segment (area-0 convention).
pub fn convex_hull(mask: &BinaryMask) -> Result<Vec<(f64, f64)>> {
    // Hull vertices are row-extreme, so per-row min/max x suffice.
    let mut points: Vec<(f64, f64)> = Vec::new();
    for y in 0..mask.height() {
        let mut min_x = None;
        let mut max_x = None;
        for x in 0..mask.width() {
            if mask.get(x, y) {
                if min_x.is_none() {
                    min_x = Some(x);
                }
                max_x = Some(x);
            }
        }
        if let (Some(a), Some(b)) = (min_x, max_x) {
            points.push((a as f64, y as f64));
            if b != a {
                points.push((b as f64, y as f64));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyMask("convex_hull"));
    }
    Ok(hull_of_points(&mut points))
}

/// Monotone chain on pre-collected points. Collinear points are dropped.
pub(crate) fn hull_of_points(points: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let n = points.len();
    if n == 1 {
        return points.to_vec();
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter() {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    lower
}

/// Shoelace area of a polygon (absolute value).
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % poly.len()];
        acc += x1 * y2 - x2 * y1;
    }
    (acc / 2.0).abs()
}

/// True if `p` is inside the polygon or within `eps` of its boundary.
pub fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)], eps: f64) -> bool {
    let n = poly.len();
    if n == 0 {
        return false;
    }
    // boundary proximity, also covers degenerate 1- and 2-vertex polygons
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if dist_to_segment(p, a, b) <= eps {
            return true;
        }
    }
    if n < 3 {
        return false;
    }
    // even-odd ray cast, half-open in y to count vertices once
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if x > p.0 {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Minimum-area oriented rectangle over the convex hull of the mask.
///
/// One rectangle side is collinear with a hull edge. Extents are the center
/// spans plus one pixel per axis, so `area() >= pixel count` holds and a
/// 1-pixel-thin bar still reports a short side of 1.
pub fn min_area_rect(mask: &BinaryMask) -> Result<RotatedRect> {
    let hull = convex_hull(mask)?;
    Ok(min_rect_of_hull(&hull))
}

pub(crate) fn min_rect_of_hull(hull: &[(f64, f64)]) -> RotatedRect {
    if hull.len() == 1 {
        return RotatedRect { center: hull[0], extents: (1.0, 1.0), angle: 0.0 };
    }
    let mut best: Option<(f64, RotatedRect)> = None;
    let n = hull.len();
    let edges = if n == 2 { 1 } else { n };
    for i in 0..edges {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        let len = (ex * ex + ey * ey).sqrt();
        if len == 0.0 {
            continue;
        }
        let u = (ex / len, ey / len);
        let v = (-u.1, u.0);
        let mut umin = f64::INFINITY;
        let mut umax = f64::NEG_INFINITY;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for &p in hull {
            let pu = p.0 * u.0 + p.1 * u.1;
            let pv = p.0 * v.0 + p.1 * v.1;
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let span_u = umax - umin;
        let span_v = vmax - vmin;
        let (long, short, long_dir) = if span_u >= span_v {
            (span_u + 1.0, span_v + 1.0, u)
        } else {
            (span_v + 1.0, span_u + 1.0, v)
        };
        let area = long * short;
        let cu = (umin + umax) / 2.0;
        let cv = (vmin + vmax) / 2.0;
        let center = (cu * u.0 + cv * v.0, cu * u.1 + cv * v.1);
        let mut angle = long_dir.1.atan2(long_dir.0);
        if angle < 0.0 {
            angle += std::f64::consts::PI;
        }
        if angle >= std::f64::consts::PI {
            angle -= std::f64::consts::PI;
        }
        let rect = RotatedRect { center, extents: (long, short), angle };
        if best.as_ref().map_or(true, |(ba, _)| area < *ba) {
            best = Some((area, rect));
        }
    }
    best.expect("hull has at least one edge").1
}

/// Rasterize a polygon onto a grid: pixel centers strictly inside or on the
/// boundary are set (even-odd rule).
pub fn rasterize_polygon(poly: &[(f64, f64)], width: u32, height: u32) -> BinaryMask {
    const EPS: f64 = 1e-9;
    let mut mask = BinaryMask::new(width, height);
    let n = poly.len();
    if n == 0 {
        return mask;
    }
    for v in poly {
        assert!(v.0.is_finite() && v.1.is_finite(), "polygon vertices must be finite");
    }
    if n == 1 {
        stamp_near_integer(&mut mask, poly[0], EPS);
        return mask;
    }

    let min_y = poly.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = poly.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let y0 = (min_y - 1.0).floor().max(0.0) as i64;
    let y1 = (max_y + 1.0).ceil().min(height as f64 - 1.0) as i64;

    let mut crossings: Vec<f64> = Vec::new();
    for y in y0..=y1 {
        let fy = y as f64;
        crossings.clear();
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            if (a.1 - b.1).abs() <= EPS {
                // horizontal edge on this scanline: fill its x range directly
                if (a.1 - fy).abs() <= EPS {
                    fill_row(&mut mask, y, a.0.min(b.0), a.0.max(b.0), EPS);
                }
                continue;
            }
            // half-open in y so shared vertices count once
            let (lo, hi) = if a.1 < b.1 { (a, b) } else { (b, a) };
            if fy >= lo.1 - EPS && fy < hi.1 - EPS {
                let t = (fy - lo.1) / (hi.1 - lo.1);
                crossings.push(lo.0 + t * (hi.0 - lo.0));
            }
        }
        crossings.sort_by(|p, q| p.partial_cmp(q).expect("finite crossings"));
        for pair in crossings.chunks_exact(2) {
            fill_row(&mut mask, y, pair[0], pair[1], EPS);
        }
    }
    // vertices exactly at pixel centers (local extrema are missed by the
    // half-open rule)
    for &v in poly {
        stamp_near_integer(&mut mask, v, EPS);
    }
    mask
}

fn fill_row(mask: &mut BinaryMask, y: i64, x_lo: f64, x_hi: f64, eps: f64) {
    if y < 0 || y >= mask.height() as i64 {
        return;
    }
    let start = (x_lo - eps).ceil().max(0.0) as i64;
    let end = (x_hi + eps).floor().min(mask.width() as f64 - 1.0) as i64;
    for x in start..=end {
        mask.set(x as u32, y as u32, true);
    }
}

fn stamp_near_integer(mask: &mut BinaryMask, p: (f64, f64), eps: f64) {
    let rx = p.0.round();
    let ry = p.1.round();
    if (p.0 - rx).abs() <= eps && (p.1 - ry).abs() <= eps {
        if rx >= 0.0 && ry >= 0.0 && (rx as u32) < mask.width() && (ry as u32) < mask.height() {
            mask.set(rx as u32, ry as u32, true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_mask(w: u32, h: u32, fill: f64, seed: u64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| rng::unit_f64(rng::mix(seed, (y * w + x) as u64)) < fill)
    }

    #[test]
    fn bbox_single_pixel() {
        let mut mask = BinaryMask::new(10, 10);
        mask.set(5, 7, true);
        assert_eq!(bounding_box(&mask).unwrap(), (5, 7, 5, 7));
    }

    #[test]
    fn bbox_extremes() {
        let mut mask = BinaryMask::new(12, 6);
        mask.set(0, 0, true);
        mask.set(9, 3, true);
        assert_eq!(bounding_box(&mask).unwrap(), (0, 0, 9, 3));
    }

    #[test]
    fn bbox_empty_is_error() {
        let mask = BinaryMask::new(4, 4);
        assert!(matches!(bounding_box(&mask), Err(Error::EmptyMask(_))));
    }

    #[test]
    fn bbox_matches_min_max_scan() {
        for seed in 0..8 {
            let mask = random_mask(16, 16, 0.2, seed);
            if mask.is_empty() {
                continue;
            }
            let px = mask.set_pixels();
            let x0 = px.iter().map(|p| p.0).min().unwrap();
            let y0 = px.iter().map(|p| p.1).min().unwrap();
            let x1 = px.iter().map(|p| p.0).max().unwrap();
            let y1 = px.iter().map(|p| p.1).max().unwrap();
            assert_eq!(bounding_box(&mask).unwrap(), (x0, y0, x1, y1));
        }
    }

    #[test]
    fn hull_of_three_points_is_triangle() {
        let mut mask = BinaryMask::new(10, 10);
        mask.set(1, 1, true);
        mask.set(8, 2, true);
        mask.set(4, 7, true);
        let hull = convex_hull(&mask).unwrap();
        assert_eq!(hull.len(), 3);
        for p in [(1.0, 1.0), (8.0, 2.0), (4.0, 7.0)] {
            assert!(hull.contains(&p));
        }
    }

    #[test]
    fn hull_of_square_has_four_vertices() {
        let mask = BinaryMask::from_fn(10, 10, |_, _| true);
        let hull = convex_hull(&mask).unwrap();
        assert_eq!(hull.len(), 4);
        assert!((polygon_area(&hull) - 81.0).abs() < 1e-9);
    }

    /// O(n^2) gift wrapping, independent of the monotone chain.
    fn gift_wrap(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let start = *points
            .iter()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        let mut hull = vec![start];
        let mut current = start;
        loop {
            let mut next = points[0];
            for &cand in points.iter() {
                if cand == current {
                    continue;
                }
                if next == current {
                    next = cand;
                    continue;
                }
                let c = cross(current, next, cand);
                let d_next = (next.0 - current.0).powi(2) + (next.1 - current.1).powi(2);
                let d_cand = (cand.0 - current.0).powi(2) + (cand.1 - current.1).powi(2);
                // pick the most counterclockwise candidate; farther on ties
                if c < 0.0 || (c == 0.0 && d_cand > d_next) {
                    next = cand;
                }
            }
            if next == start {
                break;
            }
            hull.push(next);
            current = next;
            if hull.len() > points.len() {
                panic!("gift wrap failed to close");
            }
        }
        hull
    }

    #[test]
    fn hull_matches_gift_wrapping_oracle() {
        for seed in 0..10u64 {
            let mut mask = BinaryMask::new(32, 32);
            for k in 0..50 {
                let x = (rng::mix(seed, 2 * k) % 32) as u32;
                let y = (rng::mix(seed, 2 * k + 1) % 32) as u32;
                mask.set(x, y, true);
            }
            let hull = convex_hull(&mask).unwrap();
            if hull.len() < 3 {
                continue;
            }
            let pts: Vec<(f64, f64)> =
                mask.set_pixels().iter().map(|&(x, y)| (x as f64, y as f64)).collect();
            let wrapped = gift_wrap(&pts);
            // same vertex set (starting point/rotation may differ)
            let mut a = hull.clone();
            let mut b = wrapped.clone();
            a.sort_by(|p, q| p.partial_cmp(q).unwrap());
            b.sort_by(|p, q| p.partial_cmp(q).unwrap());
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn hull_contains_every_set_pixel() {
        for seed in 20..26u64 {
            let mask = random_mask(24, 24, 0.15, seed);
            if mask.count_ones() < 3 {
                continue;
            }
            let hull = convex_hull(&mask).unwrap();
            for (x, y) in mask.set_pixels() {
                assert!(
                    point_in_polygon((x as f64, y as f64), &hull, 1e-9),
                    "pixel ({x},{y}) outside hull, seed {seed}"
                );
            }
        }
    }

    #[test]
    fn min_rect_axis_aligned_bar() {
        let mask = BinaryMask::from_fn(24, 8, |x, y| x < 20 && y < 4);
        let rect = min_area_rect(&mask).unwrap();
        assert!((rect.extents.0 - 20.0).abs() < 1e-9);
        assert!((rect.extents.1 - 4.0).abs() < 1e-9);
        assert!((rect.aspect_ratio() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn min_rect_rotated_bar_recovers_ratio() {
        // rasterize a 20x4 bar rotated 30 degrees, then recover its ratio
        let angle: f64 = 30f64.to_radians();
        let (c, s) = (angle.cos(), angle.sin());
        let mask = BinaryMask::from_fn(40, 40, |x, y| {
            let fx = x as f64 - 20.0;
            let fy = y as f64 - 20.0;
            let u = fx * c + fy * s;
            let v = -fx * s + fy * c;
            u.abs() <= 9.5 && v.abs() <= 1.5
        });
        let rect = min_area_rect(&mask).unwrap();
        assert!(
            (rect.aspect_ratio() - 5.0).abs() <= 0.2,
            "ratio {} extents {:?}",
            rect.aspect_ratio(),
            rect.extents
        );
    }

    #[test]
    fn min_rect_beats_angle_sweep() {
        for seed in 0..12u64 {
            let mut mask = BinaryMask::new(40, 40);
            for k in 0..30 {
                let x = (rng::mix(seed, 2 * k) % 40) as u32;
                let y = (rng::mix(seed, 2 * k + 1) % 40) as u32;
                mask.set(x, y, true);
            }
            let rect = min_area_rect(&mask).unwrap();
            let pts: Vec<(f64, f64)> =
                mask.set_pixels().iter().map(|&(x, y)| (x as f64, y as f64)).collect();
            for step in 0..360 {
                let theta = (step as f64) * 0.5f64.to_radians();
                let u = (theta.cos(), theta.sin());
                let v = (-u.1, u.0);
                let mut umin = f64::INFINITY;
                let mut umax = f64::NEG_INFINITY;
                let mut vmin = f64::INFINITY;
                let mut vmax = f64::NEG_INFINITY;
                for &p in &pts {
                    let pu = p.0 * u.0 + p.1 * u.1;
                    let pv = p.0 * v.0 + p.1 * v.1;
                    umin = umin.min(pu);
                    umax = umax.max(pu);
                    vmin = vmin.min(pv);
                    vmax = vmax.max(pv);
                }
                let sweep_area = (umax - umin + 1.0) * (vmax - vmin + 1.0);
                assert!(
                    rect.area() <= sweep_area + 1e-9,
                    "seed {seed} angle {theta}: {} > {}",
                    rect.area(),
                    sweep_area
                );
            }
        }
    }

    #[test]
    fn min_rect_area_covers_pixel_count() {
        for seed in 40..52u64 {
            let mask = random_mask(20, 20, 0.3, seed);
            if mask.is_empty() {
                continue;
            }
            let rect = min_area_rect(&mask).unwrap();
            assert!(
                rect.area() + 1e-9 >= mask.count_ones() as f64,
                "seed {seed}: area {} < count {}",
                rect.area(),
                mask.count_ones()
            );
        }
    }

    #[test]
    fn rasterize_square_covers_exactly() {
        let poly = [(0.0, 0.0), (9.0, 0.0), (9.0, 9.0), (0.0, 9.0)];
        let mask = rasterize_polygon(&poly, 12, 12);
        assert_eq!(mask.count_ones(), 100);
    }

    #[test]
    fn rasterize_tiny_triangle() {
        let poly = [(3.2, 3.3), (3.9, 3.4), (3.5, 3.8)];
        let mask = rasterize_polygon(&poly, 8, 8);
        assert!(mask.count_ones() <= 1);
    }

    #[test]
    fn rasterize_count_near_shoelace_area() {
        for seed in 60..70u64 {
            let mut pts: Vec<(f64, f64)> = (0..12)
                .map(|k| {
                    (
                        4.0 + rng::unit_f64(rng::mix(seed, 2 * k)) * 40.0,
                        4.0 + rng::unit_f64(rng::mix(seed, 2 * k + 1)) * 40.0,
                    )
                })
                .collect();
            let hull = hull_of_points(&mut pts);
            if hull.len() < 3 {
                continue;
            }
            let mask = rasterize_polygon(&hull, 52, 52);
            let area = polygon_area(&hull);
            let perimeter: f64 = (0..hull.len())
                .map(|i| {
                    let a = hull[i];
                    let b = hull[(i + 1) % hull.len()];
                    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
                })
                .sum();
            let count = mask.count_ones() as f64;
            assert!(
                (count - area).abs() <= perimeter + 1.0,
                "seed {seed}: count {count} area {area} perimeter {perimeter}"
            );
        }
    }

    #[test]
    fn operations_are_deterministic() {
        let mask = random_mask(20, 20, 0.3, 7);
        assert_eq!(convex_hull(&mask).unwrap(), convex_hull(&mask).unwrap());
        let r1 = min_area_rect(&mask).unwrap();
        let r2 = min_area_rect(&mask).unwrap();
        assert_eq!(r1, r2);
    }
}
