//! Dataset-characteristic statistics: overlap-of-sum, average MaxIoU,
//! connected components per instance, aspect ratio, instance counts.
//!
//! Overlap of Sum measures crowding: 1 - |union| / sum(|C_i|) over the
//! instances' bounding boxes or convex hulls, 0 for an empty image. Both
//! variants are measured on the raster grid so union and sum share one
//! discrete area measure.

use crate::error::{Error, Result};
use crate::raster::{
    bounding_box, convex_hull, label_components, min_area_rect, rasterize_polygon, BinaryMask,
    Connectivity, InstanceMap,
};

/// 1 - |union| / sum of areas; 0 for no regions. Regions must share a grid.
pub fn overlap_of_sum(regions: &[BinaryMask]) -> f64 {
    if regions.is_empty() {
        return 0.0;
    }
    let (w, h) = (regions[0].width(), regions[0].height());
    let mut covered = vec![false; (w * h) as usize];
    let mut sum = 0u64;
    for r in regions {
        assert!(r.same_dims(&regions[0]), "overlap_of_sum regions share a grid");
        for (i, &b) in r.bits().iter().enumerate() {
            if b {
                covered[i] = true;
                sum += 1;
            }
        }
    }
    if sum == 0 {
        return 0.0;
    }
    let union = covered.iter().filter(|&&c| c).count() as u64;
    1.0 - union as f64 / sum as f64
}

fn bbox_mask(map: &InstanceMap, id: u32) -> Option<BinaryMask> {
    let mask = map.instance_mask(id);
    let (x0, y0, x1, y1) = bounding_box(&mask).ok()?;
    Some(BinaryMask::from_fn(map.width(), map.height(), |x, y| {
        (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
    }))
}

fn hull_mask(map: &InstanceMap, id: u32) -> Option<BinaryMask> {
    let mask = map.instance_mask(id);
    let hull = convex_hull(&mask).ok()?;
    Some(rasterize_polygon(&hull, map.width(), map.height()))
}

/// Per-image OoS over instance bounding boxes.
pub fn oos_bbox(map: &InstanceMap) -> f64 {
    let regions: Vec<BinaryMask> =
        map.ids().into_iter().filter_map(|id| bbox_mask(map, id)).collect();
    overlap_of_sum(&regions)
}

/// Per-image OoS over rasterized instance convex hulls.
pub fn oos_convex(map: &InstanceMap) -> f64 {
    let regions: Vec<BinaryMask> =
        map.ids().into_iter().filter_map(|id| hull_mask(map, id)).collect();
    overlap_of_sum(&regions)
}

fn box_iou(a: (u32, u32, u32, u32), b: (u32, u32, u32, u32)) -> f64 {
    let ix0 = a.0.max(b.0);
    let iy0 = a.1.max(b.1);
    let ix1 = a.2.min(b.2);
    let iy1 = a.3.min(b.3);
    if ix1 < ix0 || iy1 < iy0 {
        return 0.0;
    }
    let inter = ((ix1 - ix0 + 1) as u64 * (iy1 - iy0 + 1) as u64) as f64;
    let area = |r: (u32, u32, u32, u32)| ((r.2 - r.0 + 1) as u64 * (r.3 - r.1 + 1) as u64) as f64;
    inter / (area(a) + area(b) - inter)
}

/// Mean over instances of the maximum bounding-box IoU against any other
/// instance. A single-instance image scores 0; an empty map scores 0.
pub fn avg_max_iou(map: &InstanceMap) -> f64 {
    let boxes: Vec<(u32, u32, u32, u32)> = map
        .ids()
        .into_iter()
        .filter_map(|id| bounding_box(&map.instance_mask(id)).ok())
        .collect();
    if boxes.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, &a) in boxes.iter().enumerate() {
        let mut best = 0.0f64;
        for (j, &b) in boxes.iter().enumerate() {
            if i != j {
                best = best.max(box_iou(a, b));
            }
        }
        total += best;
    }
    total / boxes.len() as f64
}

/// Mean over instances of the 8-adjacent connected-component count.
pub fn ccpi(map: &InstanceMap) -> f64 {
    let ids = map.ids();
    if ids.is_empty() {
        return 0.0;
    }
    let mut total = 0usize;
    for id in &ids {
        total += label_components(&map.instance_mask(*id), Connectivity::Eight).count;
    }
    total as f64 / ids.len() as f64
}

/// Mean over instances of the min-area-rect long/short ratio.
pub fn aspect_ratio_stats(map: &InstanceMap) -> f64 {
    let ratios: Vec<f64> = map
        .ids()
        .into_iter()
        .filter_map(|id| min_area_rect(&map.instance_mask(id)).ok())
        .map(|r| r.aspect_ratio())
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Aggregate statistics over a set of images. OoS and MaxIoU are computed
/// per image and averaged; CCPI and aspect ratio pool over all instances.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub images: usize,
    pub instances: usize,
    pub instances_per_image: f64,
    pub oos_bbox: f64,
    pub oos_convex: f64,
    pub avg_max_iou: f64,
    pub mean_aspect_ratio: f64,
    pub ccpi: f64,
    /// Images that contained no instances (their MaxIoU contributed 0).
    pub empty_images: usize,
}

pub fn dataset_report(maps: &[InstanceMap]) -> Result<DatasetReport> {
    if maps.is_empty() {
        return Err(Error::Parameter("dataset_report needs at least one map".into()));
    }
    let images = maps.len();
    let mut instances = 0usize;
    let mut oos_b = 0.0;
    let mut oos_c = 0.0;
    let mut maxiou = 0.0;
    let mut comp_total = 0usize;
    let mut ratio_total = 0.0;
    let mut ratio_count = 0usize;
    let mut empty_images = 0usize;
    for map in maps {
        let ids = map.ids();
        instances += ids.len();
        if ids.is_empty() {
            empty_images += 1;
        }
        oos_b += oos_bbox(map);
        oos_c += oos_convex(map);
        maxiou += avg_max_iou(map);
        for id in ids {
            let mask = map.instance_mask(id);
            comp_total += label_components(&mask, Connectivity::Eight).count;
            if let Ok(rect) = min_area_rect(&mask) {
                ratio_total += rect.aspect_ratio();
                ratio_count += 1;
            }
        }
    }
    Ok(DatasetReport {
        images,
        instances,
        instances_per_image: instances as f64 / images as f64,
        oos_bbox: oos_b / images as f64,
        oos_convex: oos_c / images as f64,
        avg_max_iou: maxiou / images as f64,
        mean_aspect_ratio: if ratio_count == 0 { 0.0 } else { ratio_total / ratio_count as f64 },
        ccpi: if instances == 0 { 0.0 } else { comp_total as f64 / instances as f64 },
        empty_images,
    })
}

impl DatasetReport {
    /// Key-value text form. Aspect ratio and CCPI average over instances,
    /// OoS and MaxIoU over images.
    pub fn to_text(&self, name: &str) -> String {
        format!(
            "# dataset statistics for {name}\n\
             # aspect ratio and ccpi average over instances; oos and maxiou over images\n\
             images={}\ninstances={}\ninstances_per_image={:.4}\n\
             oos_bbox={:.4}\noos_convex={:.4}\navg_max_iou={:.4}\n\
             aspect_ratio={:.4}\nccpi={:.4}\nempty_images={}\n",
            self.images,
            self.instances,
            self.instances_per_image,
            self.oos_bbox,
            self.oos_convex,
            self.avg_max_iou,
            self.mean_aspect_ratio,
            self.ccpi,
            self.empty_images,
        )
    }

    pub fn csv_header() -> &'static str {
        "Dataset,Images,Instances,Instances/image,OoS bbox,OoS convex,Average MaxIoU,Aspect ratio,CCPI"
    }

    pub fn to_csv_row(&self, name: &str) -> String {
        format!(
            "{name},{},{},{:.2},{:.2},{:.2},{:.3},{:.2},{:.2}",
            self.images,
            self.instances,
            self.instances_per_image,
            self.oos_bbox,
            self.oos_convex,
            self.avg_max_iou,
            self.mean_aspect_ratio,
            self.ccpi,
        )
    }
}
