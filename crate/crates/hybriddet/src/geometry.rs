//! Box arithmetic shared by both detector stages: IoU, anchor generation,
//! greedy NMS, delta encoding/decoding, and proposal-to-ground-truth
//! assignment.
//!
//! Boxes are kept in canonical corner form `(x1, y1, x2, y2)` with
//! `x1 < x2`, `y1 < y2`. Center form `(cx, cy, w, h)` is available for the
//! delta parameterization and for callers that think in centers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in canonical corner form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    /// Construct a canonical box. Rejects zero/negative area and non-finite
    /// coordinates.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(Error::DegenerateBox(format!(
                "non-finite coordinates ({x1},{y1},{x2},{y2})"
            )));
        }
        if x2 <= x1 || y2 <= y1 {
            return Err(Error::DegenerateBox(format!(
                "non-positive extent ({x1},{y1},{x2},{y2})"
            )));
        }
        Ok(BBox { x1, y1, x2, y2 })
    }

    /// Construct from center form `(cx, cy, w, h)`.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    /// Center form `(cx, cy, w, h)`.
    pub fn to_center(&self) -> (f64, f64, f64, f64) {
        (
            (self.x1 + self.x2) / 2.0,
            (self.y1 + self.y2) / 2.0,
            self.x2 - self.x1,
            self.y2 - self.y1,
        )
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection area with another box (zero if disjoint).
    pub fn intersection(&self, other: &BBox) -> f64 {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        w * h
    }

    /// Center-preserving scale of width and height by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<BBox> {
        let (cx, cy, w, h) = self.to_center();
        BBox::from_center(cx, cy, w * factor, h * factor)
    }

    /// Whether the point lies inside (closed-open on both axes).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x < self.x2 && y >= self.y1 && y < self.y2
    }
}

/// Intersection over union of two canonical boxes, in `[0, 1]`.
///
/// Symmetric; exactly 1.0 for identical boxes, 0.0 for disjoint ones.
/// Degenerate inputs are unrepresentable: [`BBox::new`] rejects them.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b);
    let union = a.area() + b.area() - inter;
    inter / union
}

/// One prior box tied to a pyramid level (levels are 1-based, 1..=4).
#[derive(Debug, Clone, Copy)]
pub struct Anchor {
    pub bbox: BBox,
    pub level: usize,
}

/// Dense anchor layout over a feature pyramid.
///
/// One scale per level (side = `scale * stride`), several aspect ratios.
/// `ratio` is height/width; the anchor keeps the configured area.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchorConfig {
    pub strides: Vec<usize>,
    pub ratios: Vec<f64>,
    pub scale: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig {
            strides: vec![4, 8, 16, 32],
            ratios: vec![0.5, 1.0, 2.0],
            scale: 4.0,
        }
    }
}

impl AnchorConfig {
    pub fn anchors_per_cell(&self) -> usize {
        self.ratios.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.strides.is_empty() {
            return Err(Error::Config("anchor strides empty".into()));
        }
        if self.ratios.is_empty() {
            return Err(Error::Config("no anchor shapes configured".into()));
        }
        if self.scale <= 0.0 || !self.scale.is_finite() {
            return Err(Error::Config(format!("anchor scale {} invalid", self.scale)));
        }
        if self.ratios.iter().any(|r| *r <= 0.0 || !r.is_finite()) {
            return Err(Error::Config("anchor ratio must be positive".into()));
        }
        Ok(())
    }
}

/// Generate the dense anchor set for a pyramid.
///
/// `pyramid_shapes` holds `(height, width)` in feature cells per level and
/// must match `config.strides` in length. Ordering is deterministic:
/// level-major, then row-major over cells, then anchor index.
pub fn generate_anchors(
    pyramid_shapes: &[(usize, usize)],
    config: &AnchorConfig,
) -> Result<Vec<Anchor>> {
    config.validate()?;
    if pyramid_shapes.is_empty() {
        return Err(Error::Config("empty pyramid".into()));
    }
    if pyramid_shapes.len() != config.strides.len() {
        return Err(Error::Shape(format!(
            "{} pyramid levels vs {} strides",
            pyramid_shapes.len(),
            config.strides.len()
        )));
    }
    let mut anchors = Vec::new();
    for (lvl_idx, &(h, w)) in pyramid_shapes.iter().enumerate() {
        let stride = config.strides[lvl_idx] as f64;
        let side = config.scale * stride;
        for i in 0..h {
            for j in 0..w {
                let cx = (j as f64 + 0.5) * stride;
                let cy = (i as f64 + 0.5) * stride;
                for &ratio in &config.ratios {
                    let aw = side / ratio.sqrt();
                    let ah = side * ratio.sqrt();
                    anchors.push(Anchor {
                        bbox: BBox::from_center(cx, cy, aw, ah)?,
                        level: lvl_idx + 1,
                    });
                }
            }
        }
    }
    Ok(anchors)
}

/// Greedy non-maximum suppression.
///
/// Returns kept indices in descending score order (ties broken by lower
/// index). A candidate is suppressed when its IoU with an already-kept box
/// strictly exceeds `iou_threshold`.
pub fn nms(boxes: &[BBox], scores: &[f64], iou_threshold: f64) -> Result<Vec<usize>> {
    if boxes.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} boxes vs {} scores",
            boxes.len(),
            scores.len()
        )));
    }
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::Config(format!(
            "nms threshold {iou_threshold} outside [0,1]"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("NaN score passed to nms".into()));
    }
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores checked for NaN")
            .then(a.cmp(&b))
    });
    let mut keep = Vec::new();
    let mut suppressed = vec![false; boxes.len()];
    for (i, &idx) in order.iter().enumerate() {
        if suppressed[idx] {
            continue;
        }
        keep.push(idx);
        for &jdx in &order[i + 1..] {
            if !suppressed[jdx] && iou(&boxes[idx], &boxes[jdx]) > iou_threshold {
                suppressed[jdx] = true;
            }
        }
    }
    Ok(keep)
}

/// Encode a target box as `(dx, dy, dw, dh)` offsets relative to a
/// reference box (the standard R-CNN parameterization).
pub fn encode_deltas(bbox: &BBox, reference: &BBox) -> [f64; 4] {
    let (bx, by, bw, bh) = bbox.to_center();
    let (rx, ry, rw, rh) = reference.to_center();
    [
        (bx - rx) / rw,
        (by - ry) / rh,
        (bw / rw).ln(),
        (bh / rh).ln(),
    ]
}

/// Exponent clamp keeping decoded sizes finite for wild regression outputs.
const DELTA_EXP_CLAMP: f64 = 8.0;

/// Minimum decoded side length in pixels.
pub const MIN_BOX_SIDE: f64 = 1.0;

/// Invert [`encode_deltas`]: apply offsets to a reference box.
///
/// Size exponents are clamped to keep the result finite; a decoded side
/// shorter than [`MIN_BOX_SIDE`] is expanded to that minimum around the
/// decoded center.
pub fn decode_deltas(deltas: &[f64; 4], reference: &BBox) -> BBox {
    let (rx, ry, rw, rh) = reference.to_center();
    let cx = rx + deltas[0] * rw;
    let cy = ry + deltas[1] * rh;
    let w = rw * deltas[2].clamp(-DELTA_EXP_CLAMP, DELTA_EXP_CLAMP).exp();
    let h = rh * deltas[3].clamp(-DELTA_EXP_CLAMP, DELTA_EXP_CLAMP).exp();
    let w = w.max(MIN_BOX_SIDE);
    let h = h.max(MIN_BOX_SIDE);
    BBox {
        x1: cx - w / 2.0,
        y1: cy - h / 2.0,
        x2: cx + w / 2.0,
        y2: cy + h / 2.0,
    }
}

/// Decode and clip to `[0, width] x [0, height]`, preserving the minimum
/// side by shifting inward at the border.
pub fn decode_deltas_clipped(
    deltas: &[f64; 4],
    reference: &BBox,
    width: f64,
    height: f64,
) -> BBox {
    let b = decode_deltas(deltas, reference);
    clip_to_image(&b, width, height)
}

/// Clip a box to image bounds, keeping at least [`MIN_BOX_SIDE`] of extent.
pub fn clip_to_image(b: &BBox, width: f64, height: f64) -> BBox {
    let mut x1 = b.x1.clamp(0.0, width - MIN_BOX_SIDE);
    let mut y1 = b.y1.clamp(0.0, height - MIN_BOX_SIDE);
    let mut x2 = b.x2.clamp(MIN_BOX_SIDE, width);
    let mut y2 = b.y2.clamp(MIN_BOX_SIDE, height);
    if x2 - x1 < MIN_BOX_SIDE {
        let cx = ((x1 + x2) / 2.0).clamp(MIN_BOX_SIDE / 2.0, width - MIN_BOX_SIDE / 2.0);
        x1 = cx - MIN_BOX_SIDE / 2.0;
        x2 = cx + MIN_BOX_SIDE / 2.0;
    }
    if y2 - y1 < MIN_BOX_SIDE {
        let cy = ((y1 + y2) / 2.0).clamp(MIN_BOX_SIDE / 2.0, height - MIN_BOX_SIDE / 2.0);
        y1 = cy - MIN_BOX_SIDE / 2.0;
        y2 = cy + MIN_BOX_SIDE / 2.0;
    }
    BBox { x1, y1, x2, y2 }
}

/// Per-proposal role after matching against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignLabel {
    Background,
    /// Excluded from losses. Never produced by [`assign`] under the default
    /// single-threshold rule; kept for callers that add an ignore band.
    Ignore,
    /// Foreground with a 0-based class index.
    Class(usize),
}

/// Result of matching one proposal against the ground-truth set.
#[derive(Debug, Clone, Copy)]
pub struct Assignment {
    pub label: AssignLabel,
    /// Index of the matched ground-truth box; set iff `label` is `Class`.
    pub matched_gt: Option<usize>,
    /// IoU with the matched (or best-overlapping) ground truth.
    pub iou: f64,
}

impl Assignment {
    pub fn is_positive(&self) -> bool {
        matches!(self.label, AssignLabel::Class(_))
    }
}

/// Match proposals to ground truth with a single positive threshold.
///
/// A proposal is positive for its argmax-IoU ground truth when that IoU
/// meets the threshold, otherwise background. IoU ties go to the lower
/// ground-truth index. Empty ground truth yields all background.
pub fn assign(
    proposals: &[BBox],
    gt_boxes: &[BBox],
    gt_labels: &[usize],
    pos_iou_threshold: f64,
) -> Result<Vec<Assignment>> {
    if !(pos_iou_threshold > 0.0 && pos_iou_threshold < 1.0) {
        return Err(Error::Config(format!(
            "positive IoU threshold {pos_iou_threshold} outside (0,1)"
        )));
    }
    if gt_boxes.len() != gt_labels.len() {
        return Err(Error::Shape(format!(
            "{} gt boxes vs {} labels",
            gt_boxes.len(),
            gt_labels.len()
        )));
    }
    Ok(proposals
        .iter()
        .map(|p| {
            let mut best_iou = 0.0;
            let mut best_gt = None;
            for (g, gt) in gt_boxes.iter().enumerate() {
                let ov = iou(p, gt);
                if ov > best_iou {
                    best_iou = ov;
                    best_gt = Some(g);
                }
            }
            match best_gt {
                Some(g) if best_iou >= pos_iou_threshold => Assignment {
                    label: AssignLabel::Class(gt_labels[g]),
                    matched_gt: Some(g),
                    iou: best_iou,
                },
                _ => Assignment {
                    label: AssignLabel::Background,
                    matched_gt: None,
                    iou: best_iou,
                },
            }
        })
        .collect())
}
