//! Ground-truth affinity maps and their seeded corruption.
//!
//! An affinity map stores, per kernel channel and pixel, the probability
//! that the pixel and its channel neighbor belong to the same instance.
//! Deriving it from an instance map gives exact 0/1 targets; the corruption
//! operator stands in for prediction error so the merge stage can be
//! stress-tested without any learned model.

use std::io::Read as _;

use crate::error::{Error, Result};
use crate::kernel::AffinityKernel;
use crate::raster::{InstanceMap, SemanticMap};
use crate::rng;

/// N x H x W probabilities aligned to a kernel, channel-major. `validity`
/// is false exactly where pixel + offset falls outside the image.
#[derive(Debug, Clone)]
pub struct AffinityMap {
    kernel: AffinityKernel,
    width: u32,
    height: u32,
    values: Vec<f32>,
    validity: Vec<bool>,
}

impl AffinityMap {
    pub fn from_parts(
        kernel: AffinityKernel,
        width: u32,
        height: u32,
        values: Vec<f32>,
        validity: Vec<bool>,
    ) -> Result<Self> {
        let expected = kernel.len() * (width as usize) * (height as usize);
        if values.len() != expected || validity.len() != expected {
            return Err(Error::Contract(format!(
                "affinity buffers must hold {expected} slots"
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Contract("affinity values must lie in [0,1]".into()));
        }
        Ok(AffinityMap { kernel, width, height, values, validity })
    }

    #[inline]
    pub fn kernel(&self) -> &AffinityKernel {
        &self.kernel
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
    pub fn channels(&self) -> usize {
        self.kernel.len()
    }

    #[inline]
    fn slot(&self, channel: usize, x: u32, y: u32) -> usize {
        channel * (self.width * self.height) as usize + (y * self.width + x) as usize
    }

    #[inline]
    pub fn value(&self, channel: usize, x: u32, y: u32) -> f32 {
        self.values[self.slot(channel, x, y)]
    }

    #[inline]
    pub fn valid(&self, channel: usize, x: u32, y: u32) -> bool {
        self.validity[self.slot(channel, x, y)]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.validity
    }

    /// Keep only the given kernel channels, dropping the rest. Retained
    /// channels are bit-identical to the originals.
    pub fn restrict_channels(&self, keep: &[usize]) -> Result<AffinityMap> {
        let plane = (self.width * self.height) as usize;
        let mut offsets = Vec::with_capacity(keep.len());
        let mut values = Vec::with_capacity(keep.len() * plane);
        let mut validity = Vec::with_capacity(keep.len() * plane);
        for &c in keep {
            if c >= self.channels() {
                return Err(Error::Parameter(format!("channel {c} out of range")));
            }
            offsets.push(self.kernel.offsets()[c]);
            values.extend_from_slice(&self.values[c * plane..(c + 1) * plane]);
            validity.extend_from_slice(&self.validity[c * plane..(c + 1) * plane]);
        }
        let kernel = AffinityKernel::new(
            offsets,
            self.kernel.radius(),
            self.kernel.gap(),
            false,
        )?;
        Ok(AffinityMap { kernel, width: self.width, height: self.height, values, validity })
    }
}

/// Apply a kernel to instance-segmentation ground truth.
///
/// A slot is 1 when the pixel is foreground and its neighbor carries the
/// same label, 0 otherwise; out-of-bounds slots are 0 with validity false.
pub fn gt_affinity(map: &InstanceMap, kernel: &AffinityKernel) -> AffinityMap {
    let (w, h) = (map.width(), map.height());
    let plane = (w * h) as usize;
    let n = kernel.len();
    let mut values = vec![0.0f32; n * plane];
    let mut validity = vec![false; n * plane];
    for (c, &(dy, dx)) in kernel.offsets().iter().enumerate() {
        let base = c * plane;
        for y in 0..h {
            let ny = y as i64 + dy as i64;
            for x in 0..w {
                let nx = x as i64 + dx as i64;
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let idx = base + (y * w + x) as usize;
                validity[idx] = true;
                let label = map.label(x, y);
                if label != 0 && map.label(nx as u32, ny as u32) == label {
                    values[idx] = 1.0;
                }
            }
        }
    }
    AffinityMap { kernel: kernel.clone(), width: w, height: h, values, validity }
}

/// Corrupt an affinity map with independent per-slot flips and clamped
/// Gaussian jitter. Deterministic: slot k of the stream depends only on
/// (seed, k), never on evaluation order.
pub fn corrupt_affinity(
    aff: &AffinityMap,
    flip_rate: f64,
    jitter_sd: f64,
    seed: u64,
) -> Result<AffinityMap> {
    if !(0.0..1.0).contains(&flip_rate) {
        return Err(Error::Parameter(format!("flip_rate {flip_rate} outside [0,1)")));
    }
    if jitter_sd < 0.0 || !jitter_sd.is_finite() {
        return Err(Error::Parameter(format!("jitter_sd {jitter_sd} must be >= 0")));
    }
    let mut out = aff.clone();
    let flip_seed = rng::child_seed(seed, 1);
    let jitter_seed = rng::child_seed(seed, 2);
    for (k, v) in out.values.iter_mut().enumerate() {
        if !out.validity[k] {
            continue;
        }
        if flip_rate > 0.0 && rng::unit_f64(rng::mix(flip_seed, k as u64)) < flip_rate {
            *v = 1.0 - *v;
        }
        if jitter_sd > 0.0 {
            let noise = rng::normal(jitter_seed, k as u64) * jitter_sd;
            *v = (*v as f64 + noise).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

/// Build an oracle semantic map from ground truth: probability mass
/// `correct_prob` on the true class, the remainder uniform over the others.
///
/// `flip_rate > 0` additionally reassigns the favored class of that fraction
/// of pixels to a random wrong class (seeded, per pixel).
pub fn semantic_from_instances(
    map: &InstanceMap,
    correct_prob: f64,
    flip_rate: f64,
    seed: u64,
) -> Result<SemanticMap> {
    let c = map.class_count().max(2);
    if correct_prob <= 1.0 / c as f64 || correct_prob > 1.0 {
        return Err(Error::Parameter(format!(
            "correct_prob {correct_prob} outside (1/{c}, 1]"
        )));
    }
    if !(0.0..1.0).contains(&flip_rate) {
        return Err(Error::Parameter(format!("flip_rate {flip_rate} outside [0,1)")));
    }
    let (w, h) = (map.width(), map.height());
    let rest = ((1.0 - correct_prob) / (c as f64 - 1.0)) as f32;
    let mut probs = vec![rest; (w * h) as usize * c as usize];
    let flip_seed = rng::child_seed(seed, 3);
    for y in 0..h {
        for x in 0..w {
            let pix = (y * w + x) as u64;
            let label = map.label(x, y);
            let base = (pix as usize) * c as usize;
            let true_class = if label == 0 { 0 } else { map.class_of(label).unwrap_or(0) };
            let mut class = true_class;
            if flip_rate > 0.0 && rng::unit_f64(rng::mix(flip_seed, pix * 2)) < flip_rate {
                // deterministic wrong class
                let shift = 1 + (rng::mix(flip_seed, pix * 2 + 1) % (c as u64 - 1)) as u32;
                class = (true_class + shift) % c;
            }
            probs[base + class as usize] = correct_prob as f32;
        }
    }
    SemanticMap::new(c, w, h, probs)
}

const AFF_MAGIC: &[u8; 4] = b"AFF1";

/// Serialize to the AFF1 binary layout: magic, little-endian u32 N/H/W,
/// N pairs of little-endian i32 (dy, dx), N*H*W little-endian f32 values in
/// channel-major row-major order, then N*H*W validity bytes.
pub fn write_aff1(aff: &AffinityMap) -> Vec<u8> {
    let n = aff.channels() as u32;
    let mut out = Vec::with_capacity(16 + aff.values.len() * 5);
    out.extend_from_slice(AFF_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&aff.height.to_le_bytes());
    out.extend_from_slice(&aff.width.to_le_bytes());
    for &(dy, dx) in aff.kernel.offsets() {
        out.extend_from_slice(&dy.to_le_bytes());
        out.extend_from_slice(&dx.to_le_bytes());
    }
    for v in &aff.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(aff.validity.iter().map(|&b| b as u8));
    out
}

/// Parse an AFF1 buffer. The kernel is reconstructed from the stored
/// offsets; radius is the smallest integer covering their norms and the
/// symmetric flag is recovered structurally.
pub fn read_aff1(bytes: &[u8]) -> Result<AffinityMap> {
    let src = "<aff1 buffer>";
    let mut cursor = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cursor.read_exact(&mut magic).map_err(|_| Error::parse(src, "truncated magic"))?;
    if &magic != AFF_MAGIC {
        return Err(Error::parse(src, "bad magic"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |cursor: &mut std::io::Cursor<&[u8]>, what: &str| -> Result<u32> {
        cursor
            .read_exact(&mut u32buf)
            .map_err(|_| Error::parse(src, format!("truncated {what}")))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let n = read_u32(&mut cursor, "N")?;
    let h = read_u32(&mut cursor, "H")?;
    let w = read_u32(&mut cursor, "W")?;
    let mut offsets = Vec::with_capacity(n as usize);
    let mut i32buf = [0u8; 4];
    for _ in 0..n {
        cursor.read_exact(&mut i32buf).map_err(|_| Error::parse(src, "truncated offsets"))?;
        let dy = i32::from_le_bytes(i32buf);
        cursor.read_exact(&mut i32buf).map_err(|_| Error::parse(src, "truncated offsets"))?;
        let dx = i32::from_le_bytes(i32buf);
        offsets.push((dy, dx));
    }
    let plane = (w as usize) * (h as usize);
    let total = n as usize * plane;
    let mut values = Vec::with_capacity(total);
    let mut f32buf = [0u8; 4];
    for _ in 0..total {
        cursor.read_exact(&mut f32buf).map_err(|_| Error::parse(src, "truncated values"))?;
        values.push(f32::from_le_bytes(f32buf));
    }
    let mut validity_bytes = vec![0u8; total];
    cursor
        .read_exact(&mut validity_bytes)
        .map_err(|_| Error::parse(src, "truncated validity"))?;
    let validity: Vec<bool> = validity_bytes.into_iter().map(|b| b != 0).collect();

    let radius = offsets
        .iter()
        .map(|&(dy, dx)| ((dy as f64).powi(2) + (dx as f64).powi(2)).sqrt())
        .fold(0.0f64, f64::max)
        .round() as u32;
    let set: std::collections::BTreeSet<(i32, i32)> = offsets.iter().copied().collect();
    let symmetric = !set.is_empty() && set.iter().all(|&(dy, dx)| set.contains(&(-dy, -dx)));
    let kernel = AffinityKernel::new(offsets, radius.max(1), 1, symmetric)?;
    if kernel.len() != n as usize {
        return Err(Error::parse(src, "duplicate offsets in header"));
    }
    Ok(AffinityMap { kernel, width: w, height: h, values, validity })
}

pub fn save_aff1(aff: &AffinityMap, path: &std::path::Path) -> Result<()> {
    crate::raster::io::write_atomic(path, &write_aff1(aff))
}

pub fn load_aff1(path: &std::path::Path) -> Result<AffinityMap> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_aff1(&bytes)
}
