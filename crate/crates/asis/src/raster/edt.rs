//! Exact Euclidean distance transform (two-pass lower-envelope method).

use super::BinaryMask;

const INF: f64 = 1e20;

/// 1D squared-distance transform of a sampled function.
fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let intersect = |p: usize, q: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let mut s = intersect(v[k], q);
        while s <= z[k] {
            k -= 1; // never underflows: z[0] = -inf and s is finite
            s = intersect(v[k], q);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = d * d + f[p];
    }
}

/// Euclidean distance from every pixel to the nearest set pixel of `seed`.
///
/// Pixels of the seed itself get 0. If the seed is empty every distance is
/// a large finite sentinel (> any grid diameter).
pub fn distance_transform(seed: &BinaryMask) -> Vec<f64> {
    let (w, h) = (seed.width() as usize, seed.height() as usize);
    let mut grid = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            grid[y * w + x] = if seed.get(x as u32, y as u32) { 0.0 } else { INF };
        }
    }

    let n = w.max(h);
    let mut f = vec![0.0f64; n];
    let mut out1 = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];

    // columns
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        dt_1d(&f[..h], &mut out1[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out1[y];
        }
    }
    // rows
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..y * w + w]);
        dt_1d(&f[..w], &mut out1[..w], &mut v, &mut z);
        for x in 0..w {
            grid[y * w + x] = out1[x].sqrt();
        }
    }
    grid
}
