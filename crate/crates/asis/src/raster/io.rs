//! File interchange for instance maps and binary masks.
//!
//! Instance maps travel as 16-bit single-channel PNGs (pixel value =
//! instance id) with a UTF-8 key-value sidecar listing per-instance class,
//! optional depth, and optional confidence:
//!
//! ```text
//! id=1 class=1 depth=2
//! id=2 class=1 depth=0 confidence=0.8125
//! ```
//!
//! Binary masks use run-length encoding: row-major, alternating 0/1 run
//! counts starting with the 0-run, as decimal integers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};

use super::{BinaryMask, InstanceMap};
use crate::error::{Error, Result};

/// Sidecar path for a given PNG path: same stem, `.txt` extension.
pub fn sidecar_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("txt")
}

/// Write a file atomically (temp + rename) so partial writes never surface.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    f.write_all(bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    f.sync_all().ok();
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Save an instance map with optional per-instance confidences.
pub fn save_instance_map(
    map: &InstanceMap,
    confidences: Option<&BTreeMap<u32, f64>>,
    png_path: &Path,
) -> Result<()> {
    for &id in map.classes().keys() {
        if id > u16::MAX as u32 {
            return Err(Error::Parameter(format!("instance id {id} exceeds 16-bit PNG range")));
        }
    }
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(
        map.width(),
        map.height(),
        |x, y| Luma([map.label(x, y) as u16]),
    );
    let mut png_bytes: Vec<u8> = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png_bytes), image::ImageFormat::Png)
        .map_err(|e| Error::image(png_path.display().to_string(), e))?;
    write_atomic(png_path, &png_bytes)?;

    let mut sidecar = String::new();
    for (&id, &class) in map.classes() {
        sidecar.push_str(&format!("id={id} class={class}"));
        if let Some(depth) = map.depth_order().and_then(|d| d.get(&id)) {
            sidecar.push_str(&format!(" depth={depth}"));
        }
        if let Some(conf) = confidences.and_then(|c| c.get(&id)) {
            sidecar.push_str(&format!(" confidence={conf:.6}"));
        }
        sidecar.push('\n');
    }
    write_atomic(&sidecar_path(png_path), sidecar.as_bytes())
}

/// Load an instance map and any confidences recorded in its sidecar.
pub fn load_instance_map(png_path: &Path) -> Result<(InstanceMap, BTreeMap<u32, f64>)> {
    let png_name = png_path.display().to_string();
    let bytes = fs::read(png_path).map_err(|e| Error::io(&png_name, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::image(&png_name, e))?
        .into_luma16();
    let (w, h) = img.dimensions();
    let labels: Vec<u32> = img.into_raw().into_iter().map(|v| v as u32).collect();

    let sc_path = sidecar_path(png_path);
    let sc_name = sc_path.display().to_string();
    let text = fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_name, e))?;
    let mut classes = BTreeMap::new();
    let mut depths = BTreeMap::new();
    let mut confidences = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut id = None;
        let mut class = None;
        let mut depth = None;
        let mut conf = None;
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| {
                Error::parse(&sc_name, format!("line {}: token `{token}`", lineno + 1))
            })?;
            match key {
                "id" => id = Some(parse_num::<u32>(&sc_name, lineno, value)?),
                "class" => class = Some(parse_num::<u32>(&sc_name, lineno, value)?),
                "depth" => depth = Some(parse_num::<u32>(&sc_name, lineno, value)?),
                "confidence" => conf = Some(parse_num::<f64>(&sc_name, lineno, value)?),
                _ => {
                    return Err(Error::parse(
                        &sc_name,
                        format!("line {}: unknown key `{key}`", lineno + 1),
                    ))
                }
            }
        }
        let id = id.ok_or_else(|| Error::parse(&sc_name, format!("line {}: no id", lineno + 1)))?;
        let class = class
            .ok_or_else(|| Error::parse(&sc_name, format!("line {}: no class", lineno + 1)))?;
        classes.insert(id, class);
        if let Some(d) = depth {
            depths.insert(id, d);
        }
        if let Some(c) = conf {
            confidences.insert(id, c);
        }
    }
    let depth_order = if depths.is_empty() { None } else { Some(depths) };
    let map = InstanceMap::new(w, h, labels, classes, depth_order)?;
    Ok((map, confidences))
}

fn parse_num<T: std::str::FromStr>(path: &str, lineno: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(path, format!("line {}: bad number `{s}`", lineno + 1)))
}

/// Run-length encode: alternating 0/1 run counts, starting with the 0-run.
pub fn rle_encode(mask: &BinaryMask) -> Vec<u64> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0u64;
    for &b in mask.bits() {
        if b == current {
            count += 1;
        } else {
            runs.push(count);
            current = b;
            count = 1;
        }
    }
    runs.push(count);
    runs
}

pub fn rle_decode(width: u32, height: u32, runs: &[u64]) -> Result<BinaryMask> {
    let total: u64 = runs.iter().sum();
    if total != width as u64 * height as u64 {
        return Err(Error::Contract(format!(
            "rle runs sum to {total}, expected {}",
            width as u64 * height as u64
        )));
    }
    let mut bits = Vec::with_capacity(total as usize);
    let mut value = false;
    for &run in runs {
        bits.extend(std::iter::repeat(value).take(run as usize));
        value = !value;
    }
    BinaryMask::from_bits(width, height, bits)
}

/// Text form: `<width> <height> <run> <run> ...`.
pub fn rle_to_string(mask: &BinaryMask) -> String {
    let runs = rle_encode(mask);
    let mut s = format!("{} {}", mask.width(), mask.height());
    for r in runs {
        s.push(' ');
        s.push_str(&r.to_string());
    }
    s
}

pub fn rle_from_string(s: &str) -> Result<BinaryMask> {
    let mut nums = s.split_whitespace();
    let w: u32 = nums
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse("<rle string>", "missing width"))?;
    let h: u32 = nums
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse("<rle string>", "missing height"))?;
    let runs: Vec<u64> = nums
        .map(|t| t.parse().map_err(|_| Error::parse("<rle string>", format!("bad run `{t}`"))))
        .collect::<Result<_>>()?;
    rle_decode(w, h, &runs)
}
