//! Affinity kernel construction and dataset-adaptive sizing.
//!
//! A kernel is an ordered set of integer pixel offsets; affinity channel i
//! holds, for every pixel p, the probability that p and p + offsets[i]
//! belong to the same instance. Offsets of the asymmetric kernel occupy a
//! half-plane so no +/- pair is represented twice; the kernel radius `r_k`
//! bounds how far apart two fragments of one instance can be and still be
//! connected directly, and the neighbor gap `g` controls sparsity.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::{
    distance_transform, label_components, BinaryMask, Connectivity, InstanceMap,
};

/// Ordered list of integer (dy, dx) offsets plus the parameters that shaped it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityKernel {
    offsets: Vec<(i32, i32)>,
    radius: u32,
    gap: u32,
    symmetric: bool,
}

#[inline]
fn in_half_plane(dy: i32, dx: i32) -> bool {
    dy > 0 || (dy == 0 && dx > 0)
}

impl AffinityKernel {
    /// Validate and canonicalize. Offsets are deduplicated and sorted by
    /// (dy, dx) so channel order is reproducible.
    pub fn new(offsets: Vec<(i32, i32)>, radius: u32, gap: u32, symmetric: bool) -> Result<Self> {
        let set: BTreeSet<(i32, i32)> = offsets.into_iter().collect();
        if set.contains(&(0, 0)) {
            return Err(Error::Contract("kernel contains the (0,0) offset".into()));
        }
        let bound = radius as f64 + 0.5;
        for &(dy, dx) in &set {
            let norm = ((dy as f64).powi(2) + (dx as f64).powi(2)).sqrt();
            if norm > bound {
                return Err(Error::Contract(format!(
                    "offset ({dy},{dx}) norm {norm:.3} exceeds r_k + 0.5 = {bound}"
                )));
            }
        }
        if symmetric {
            for &(dy, dx) in &set {
                if !set.contains(&(-dy, -dx)) {
                    return Err(Error::Contract(format!(
                        "symmetric kernel missing negation of ({dy},{dx})"
                    )));
                }
            }
        } else {
            for &(dy, dx) in &set {
                if !in_half_plane(dy, dx) {
                    return Err(Error::Contract(format!(
                        "asymmetric kernel offset ({dy},{dx}) outside the half-plane"
                    )));
                }
            }
        }
        Ok(AffinityKernel { offsets: set.into_iter().collect(), radius, gap, symmetric })
    }

    #[inline]
    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn gap(&self) -> u32 {
        self.gap
    }

    #[inline]
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Text serialization: a header line then one `dy dx` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "asis-kernel v1 r_k={} g={} sym={}\n",
            self.radius,
            self.gap,
            if self.symmetric { 1 } else { 0 }
        );
        for &(dy, dx) in &self.offsets {
            writeln!(s, "{dy} {dx}").expect("string write");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let src = "<kernel text>";
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(src, "empty input"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("asis-kernel") || parts.next() != Some("v1") {
            return Err(Error::parse(src, format!("bad header `{header}`")));
        }
        let mut radius = None;
        let mut gap = None;
        let mut sym = None;
        for token in parts {
            let (k, v) =
                token.split_once('=').ok_or_else(|| Error::parse(src, format!("token `{token}`")))?;
            match k {
                "r_k" => radius = v.parse::<u32>().ok(),
                "g" => gap = v.parse::<u32>().ok(),
                "sym" => sym = v.parse::<u8>().ok(),
                _ => return Err(Error::parse(src, format!("unknown header key `{k}`"))),
            }
        }
        let (radius, gap, sym) = match (radius, gap, sym) {
            (Some(r), Some(g), Some(s)) if s <= 1 => (r, g, s == 1),
            _ => return Err(Error::parse(src, "header must carry r_k, g and sym=0|1")),
        };
        let mut offsets = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut nums = line.split_whitespace();
            let dy: i32 = nums
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(src, format!("line {}: bad dy", i + 2)))?;
            let dx: i32 = nums
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(src, format!("line {}: bad dx", i + 2)))?;
            offsets.push((dy, dx));
        }
        AffinityKernel::new(offsets, radius, gap, sym)
    }
}

fn check_params(r_k: u32, g: u32) -> Result<()> {
    if r_k < 1 || g < 1 {
        return Err(Error::Parameter(format!("kernel parameters r_k={r_k}, g={g} must be >= 1")));
    }
    Ok(())
}

/// Half-plane offsets of the asymmetric semicircle kernel.
///
/// For g = 1 this is every half-plane integer offset with norm <= r_k, which
/// makes the one-hop reachability guarantee hold exactly. For g >= 2 a dense
/// core (norm <= min(2, r_k)) is kept and outer rings at radii 2+g, 2+2g, ...
/// are sampled at angular steps of g/r radians.
fn asis_offsets(r_k: u32, g: u32) -> Vec<(i32, i32)> {
    let r = r_k as i32;
    let mut set: BTreeSet<(i32, i32)> = BTreeSet::new();
    if g == 1 {
        for dy in 0..=r {
            for dx in -r..=r {
                if in_half_plane(dy, dx) && dy * dy + dx * dx <= r * r {
                    set.insert((dy, dx));
                }
            }
        }
        return set.into_iter().collect();
    }
    // dense core
    let core = r.min(2);
    for dy in 0..=core {
        for dx in -core..=core {
            if in_half_plane(dy, dx) && dy * dy + dx * dx <= core * core {
                set.insert((dy, dx));
            }
        }
    }
    // sampled outer rings
    let bound = r_k as f64 + 0.5;
    let mut ring = 2 + g;
    while ring <= r_k {
        let rf = ring as f64;
        let step = g as f64 / rf;
        let mut theta = 0.0;
        while theta < std::f64::consts::PI {
            let dy = (rf * theta.sin()).round() as i32;
            let dx = (rf * theta.cos()).round() as i32;
            let norm = ((dy * dy + dx * dx) as f64).sqrt();
            if in_half_plane(dy, dx) && norm <= bound {
                set.insert((dy, dx));
            }
            theta += step;
        }
        ring += g;
    }
    set.into_iter().collect()
}

/// Asymmetric semicircle kernel with radius `r_k` and neighbor gap `g`.
pub fn generate_asis_kernel(r_k: u32, g: u32) -> Result<AffinityKernel> {
    check_params(r_k, g)?;
    AffinityKernel::new(asis_offsets(r_k, g), r_k, g, false)
}

/// Centered-symmetric variant: the asymmetric offsets plus their negations.
pub fn generate_symmetric_kernel(r_k: u32, g: u32) -> Result<AffinityKernel> {
    check_params(r_k, g)?;
    let mut offsets = asis_offsets(r_k, g);
    let mirrored: Vec<(i32, i32)> = offsets.iter().map(|&(dy, dx)| (-dy, -dx)).collect();
    offsets.extend(mirrored);
    AffinityKernel::new(offsets, r_k, g, true)
}

/// Dyadic 8-direction symmetric kernel: the 8 compass directions at
/// distances 1, 2, 4, ..., 2^(levels-1). With 7 levels this is the classic
/// 56-neighbor configuration used as the symmetric ablation baseline.
pub fn dyadic_symmetric_kernel(levels: u32) -> Result<AffinityKernel> {
    if levels < 1 {
        return Err(Error::Parameter("dyadic kernel needs at least one level".into()));
    }
    let mut offsets = Vec::new();
    for k in 0..levels {
        let d = 1i32 << k;
        for (dy, dx) in [(0, d), (0, -d), (d, 0), (-d, 0), (d, d), (d, -d), (-d, d), (-d, -d)] {
            offsets.push((dy, dx));
        }
    }
    let max_d = 1u32 << (levels - 1);
    let radius = ((max_d as f64) * std::f64::consts::SQRT_2).ceil() as u32;
    AffinityKernel::new(offsets, radius, 1, true)
}

/// Drop the redundant member of every +/- offset pair of a symmetric kernel.
///
/// Keeps the half-plane representative; the result has exactly half the
/// offsets and is no longer marked symmetric.
pub fn deduplicate_symmetric(kernel: &AffinityKernel) -> Result<AffinityKernel> {
    if !kernel.symmetric() {
        return Err(Error::Contract("deduplicate_symmetric requires a symmetric kernel".into()));
    }
    let kept: Vec<(i32, i32)> =
        kernel.offsets().iter().copied().filter(|&(dy, dx)| in_half_plane(dy, dx)).collect();
    debug_assert_eq!(kept.len() * 2, kernel.len());
    AffinityKernel::new(kept, kernel.radius(), kernel.gap(), false)
}

/// Fragmentation and stroke-width statistics of a dataset, the inputs to
/// adaptive kernel sizing.
#[derive(Debug, Clone, Default)]
pub struct DatasetGapStats {
    /// Per fragmented instance: distance from its largest connected
    /// component to the nearest other component (pixel centers).
    pub gaps: Vec<f64>,
    /// Per instance: median stroke thickness, from the medial ridge of the
    /// distance-to-background transform.
    pub thicknesses: Vec<f64>,
}

/// Measure gaps and thicknesses over a set of instance maps.
///
/// `sample_limit` caps the number of instances examined (None = all).
/// Instances with a single connected component contribute only a thickness.
pub fn measure_gap_stats(
    maps: &[InstanceMap],
    sample_limit: Option<usize>,
) -> Result<DatasetGapStats> {
    if maps.is_empty() {
        return Err(Error::Parameter("measure_gap_stats needs at least one map".into()));
    }
    let mut stats = DatasetGapStats::default();
    let mut examined = 0usize;
    'outer: for map in maps {
        for id in map.ids() {
            if let Some(limit) = sample_limit {
                if examined >= limit {
                    break 'outer;
                }
            }
            examined += 1;
            let mask = map.instance_mask(id);
            if mask.is_empty() {
                continue;
            }
            if let Some(t) = median_stroke_thickness(&mask) {
                stats.thicknesses.push(t);
            }
            if let Some(gap) = largest_component_gap(&mask) {
                stats.gaps.push(gap);
            }
        }
    }
    Ok(stats)
}

/// Distance from the largest 8-adjacent component to the nearest other
/// component of the same mask, or None if the mask is connected.
pub fn largest_component_gap(mask: &BinaryMask) -> Option<f64> {
    let labeled = label_components(mask, Connectivity::Eight);
    if labeled.count < 2 {
        return None;
    }
    let mut sizes = vec![0usize; labeled.count + 1];
    for &l in &labeled.labels {
        sizes[l as usize] += 1;
    }
    let largest = (1..=labeled.count).max_by_key(|&i| (sizes[i], usize::MAX - i)).unwrap() as u32;

    let seed = BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        labeled.labels[(y * mask.width() + x) as usize] == largest
    });
    let dt = distance_transform(&seed);
    let mut best = f64::INFINITY;
    for (idx, &l) in labeled.labels.iter().enumerate() {
        if l != 0 && l != largest {
            best = best.min(dt[idx]);
        }
    }
    best.is_finite().then_some(best)
}

/// Median stroke thickness: twice the median distance-to-background over
/// the medial ridge (pixels whose distance is a local maximum).
fn median_stroke_thickness(mask: &BinaryMask) -> Option<f64> {
    let (w, h) = (mask.width(), mask.height());
    let background = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y));
    if background.is_empty() {
        // no background at all; thickness is the full grid
        return Some(w.min(h) as f64);
    }
    let dt = distance_transform(&background);
    let mut ridge: Vec<f64> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let d = dt[(y * w + x) as usize];
            let mut is_max = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    if dt[(ny * w as i64 + nx) as usize] > d {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                ridge.push(d);
            }
        }
    }
    if ridge.is_empty() {
        return None;
    }
    ridge.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(2.0 * ridge[ridge.len() / 2])
}

/// Nearest-rank quantile of an unsorted sample.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Pick (r_k, g) from dataset statistics.
///
/// r_k covers the `coverage_q` quantile of the recorded gaps (clamped to
/// [2, r_max]); with no fragmented instances it falls back to twice the
/// median stroke thickness. g is the smallest spacing that keeps the kernel
/// within `neighbor_budget` offsets.
pub fn adapt_kernel_params(
    stats: &DatasetGapStats,
    coverage_q: f64,
    neighbor_budget: usize,
    r_max: u32,
) -> Result<(u32, u32)> {
    if stats.gaps.is_empty() && stats.thicknesses.is_empty() {
        return Err(Error::Parameter("adapt_kernel_params: empty gap statistics".into()));
    }
    if !(0.0..=1.0).contains(&coverage_q) {
        return Err(Error::Parameter(format!("coverage_q {coverage_q} outside [0,1]")));
    }
    if neighbor_budget == 0 || r_max < 2 {
        return Err(Error::Parameter("neighbor_budget must be >= 1 and r_max >= 2".into()));
    }
    let r_k = if stats.gaps.is_empty() {
        let med = quantile(&stats.thicknesses, 0.5);
        ((2.0 * med).ceil() as u32).clamp(2, r_max)
    } else {
        (quantile(&stats.gaps, coverage_q).ceil() as u32).clamp(2, r_max)
    };
    let mut g = 1u32;
    loop {
        let count = asis_offsets(r_k, g).len();
        if count <= neighbor_budget {
            return Ok((r_k, g));
        }
        g += 1;
        if g > 2 * r_k {
            // a single ring cannot exceed the budget at this spacing
            return Ok((r_k, g));
        }
    }
}

pub const DEFAULT_COVERAGE_Q: f64 = 0.95;
pub const DEFAULT_NEIGHBOR_BUDGET: usize = 64;
pub const DEFAULT_R_MAX: u32 = 64;

/// `adapt_kernel_params` with the default coverage, budget and radius cap.
pub fn adapt_kernel_params_default(stats: &DatasetGapStats) -> Result<(u32, u32)> {
    adapt_kernel_params(stats, DEFAULT_COVERAGE_Q, DEFAULT_NEIGHBOR_BUDGET, DEFAULT_R_MAX)
}
