//! Mask average precision in the COCO convention.
//!
//! Detections are matched greedily in confidence order: each detection
//! takes the unmatched same-class ground-truth instance with the highest
//! IoU, provided it reaches the threshold. AP is the area under the
//! interpolated precision-recall curve sampled at 101 recall points, and
//! mmAP averages AP over the IoU thresholds 0.50:0.05:0.95 and over the
//! classes present in the ground truth.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, InstanceMap};

/// One predicted instance.
#[derive(Debug, Clone)]
pub struct Detection {
    pub mask: BinaryMask,
    pub class: u32,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Strictly increasing thresholds in (0, 1).
    pub iou_thresholds: Vec<f64>,
    /// When false, class labels are ignored during matching.
    pub class_aware: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_thresholds: coco_thresholds(), class_aware: true }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::Parameter("eval needs at least one IoU threshold".into()));
        }
        for pair in self.iou_thresholds.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Parameter("IoU thresholds must be strictly increasing".into()));
            }
        }
        if self.iou_thresholds.iter().any(|t| !(0.0..1.0).contains(t) || *t == 0.0) {
            return Err(Error::Parameter("IoU thresholds must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// The ten standard thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Intersection over union of two same-sized masks; defined 0 when both are
/// empty.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch {
            context: "mask_iou",
            left_w: a.width(),
            left_h: a.height(),
            right_w: b.width(),
            right_h: b.height(),
        });
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&ba, &bb) in a.bits().iter().zip(b.bits()) {
        if ba && bb {
            inter += 1;
        }
        if ba || bb {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

struct GtEntry {
    mask: BinaryMask,
    class: u32,
}

fn gt_entries(gts: &InstanceMap) -> Vec<GtEntry> {
    gts.ids()
        .into_iter()
        .map(|id| GtEntry {
            mask: gts.instance_mask(id),
            class: gts.class_of(id).unwrap_or(0),
        })
        .collect()
}

/// Greedy matching at one threshold; returns per-detection hit flags in
/// confidence order plus the GT count considered.
fn match_at_threshold(
    dets: &[Detection],
    gts: &[GtEntry],
    iou_t: f64,
    class_aware: bool,
) -> Result<(Vec<bool>, usize)> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // descending confidence; stable, so input index breaks ties
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let mut gt_taken = vec![false; gts.len()];
    let mut hits = Vec::with_capacity(dets.len());
    for &d in &order {
        let det = &dets[d];
        let mut best: Option<(f64, usize)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_taken[g] || (class_aware && gt.class != det.class) {
                continue;
            }
            let iou = mask_iou(&det.mask, &gt.mask)?;
            if iou >= iou_t {
                let better = match best {
                    None => true,
                    Some((bi, _)) => iou > bi,
                };
                if better {
                    best = Some((iou, g));
                }
            }
        }
        match best {
            Some((_, g)) => {
                gt_taken[g] = true;
                hits.push(true);
            }
            None => hits.push(false),
        }
    }
    Ok((hits, gts.len()))
}

/// 101-point interpolated AP from confidence-ordered hit flags.
fn ap_from_hits(hits: &[bool], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return 0.0;
    }
    let mut precisions = Vec::with_capacity(hits.len());
    let mut recalls = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (i, &hit) in hits.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precisions.push(tp as f64 / (i + 1) as f64);
        recalls.push(tp as f64 / gt_count as f64);
    }
    let mut ap = 0.0;
    for r in 0..=100 {
        let r = r as f64 / 100.0;
        let best = precisions
            .iter()
            .zip(&recalls)
            .filter(|(_, &rec)| rec >= r)
            .map(|(&p, _)| p)
            .fold(0.0f64, f64::max);
        ap += best;
    }
    ap / 101.0
}

/// AP of a detection set against one image's ground truth at one threshold.
///
/// Returns None ("skipped") when the ground truth is empty: with nothing to
/// recall the precision-recall curve is undefined.
pub fn average_precision(
    dets: &[Detection],
    gts: &InstanceMap,
    iou_t: f64,
    class_aware: bool,
) -> Result<Option<f64>> {
    let entries = gt_entries(gts);
    if entries.is_empty() {
        return Ok(None);
    }
    for det in dets {
        if det.mask.width() != gts.width() || det.mask.height() != gts.height() {
            return Err(Error::DimensionMismatch {
                context: "average_precision detection vs ground truth",
                left_w: det.mask.width(),
                left_h: det.mask.height(),
                right_w: gts.width(),
                right_h: gts.height(),
            });
        }
    }
    if class_aware {
        // average over classes present in the ground truth
        let mut classes: Vec<u32> = entries.iter().map(|g| g.class).collect();
        classes.sort_unstable();
        classes.dedup();
        let mut total = 0.0;
        for class in &classes {
            let class_gts: Vec<GtEntry> = entries
                .iter()
                .filter(|g| g.class == *class)
                .map(|g| GtEntry { mask: g.mask.clone(), class: g.class })
                .collect();
            let class_dets: Vec<Detection> =
                dets.iter().filter(|d| d.class == *class).cloned().collect();
            let (hits, n) = match_at_threshold(&class_dets, &class_gts, iou_t, true)?;
            total += ap_from_hits(&hits, n);
        }
        Ok(Some(total / classes.len() as f64))
    } else {
        let (hits, n) = match_at_threshold(dets, &entries, iou_t, false)?;
        Ok(Some(ap_from_hits(&hits, n)))
    }
}

/// Mean AP over the configured thresholds (and classes present in GT).
pub fn mmap(dets: &[Detection], gts: &InstanceMap, config: &EvalConfig) -> Result<Option<f64>> {
    config.validate()?;
    let mut total = 0.0;
    for &t in &config.iou_thresholds {
        match average_precision(dets, gts, t, config.class_aware)? {
            Some(ap) => total += ap,
            None => return Ok(None),
        }
    }
    Ok(Some(total / config.iou_thresholds.len() as f64))
}

/// Turn a segmentation result into detections for evaluation.
pub fn detections_from_result(result: &crate::graphmerge::SegmentationResult) -> Vec<Detection> {
    result
        .map
        .ids()
        .into_iter()
        .map(|id| Detection {
            mask: result.map.instance_mask(id),
            class: result.map.class_of(id).unwrap_or(1),
            confidence: result.confidences.get(&id).copied().unwrap_or(0.0),
        })
        .collect()
}

/// Per-threshold AP table plus the summary mean, for reports.
pub fn ap_table(dets: &[Detection], gts: &InstanceMap, config: &EvalConfig) -> Result<String> {
    config.validate()?;
    let mut out = String::from("iou_threshold,ap\n");
    let mut total = 0.0;
    let mut count = 0usize;
    for &t in &config.iou_thresholds {
        match average_precision(dets, gts, t, config.class_aware)? {
            Some(ap) => {
                out.push_str(&format!("{t:.2},{ap:.6}\n"));
                total += ap;
                count += 1;
            }
            None => out.push_str(&format!("{t:.2},skipped\n")),
        }
    }
    if count > 0 {
        out.push_str(&format!("mmap,{:.6}\n", total / count as f64));
    } else {
        out.push_str("mmap,skipped\n");
    }
    Ok(out)
}
