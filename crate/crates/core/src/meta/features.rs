//! Hand-crafted per-segment features for meta classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameTruth, Label, ScoreMap, Segment};
use crate::segmentation::{segment_score_stats, Mask};

pub const FEATURE_COUNT: usize = 15;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "size",
    "interiorSize",
    "boundarySize",
    "boundaryRatio",
    "meanScore",
    "varScore",
    "meanBoundaryScore",
    "meanInteriorScore",
    "interiorBoundaryGap",
    "centerRow",
    "centerCol",
    "bboxWidth",
    "bboxHeight",
    "bboxAspect",
    "touchesRoiBorder",
];

/// Fixed-order feature vector, see [`FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatures(pub [f64; FEATURE_COUNT]);

impl MetaFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.0[i])
    }
}

/// True when some 8-neighbour of a segment pixel is outside the frame or
/// outside the ROI.
fn touches_roi_border(seg: &Segment, roi: &Mask) -> bool {
    let (h, w) = (roi.height() as i64, roi.width() as i64);
    seg.pixels.iter().any(|p| {
        (-1i64..=1).any(|dv| {
            (-1i64..=1).any(|dh| {
                let (r, c) = (p.row as i64 + dv, p.col as i64 + dh);
                r < 0 || c < 0 || r >= h || c >= w || !roi.get(r as u32, c as u32)
            })
        })
    })
}

pub fn extract_meta_features(seg: &Segment, score: &ScoreMap, roi: &Mask) -> Result<MetaFeatures> {
    if (roi.height(), roi.width()) != (score.height(), score.width()) {
        return Err(Error::SizeMismatch(format!(
            "score {}x{} vs roi {}x{}",
            score.height(),
            score.width(),
            roi.height(),
            roi.width()
        )));
    }
    let stats = segment_score_stats(seg, score)?;
    let (hh, ww) = (score.height() as f64, score.width() as f64);
    let size = seg.size as f64;
    let interior = seg.interior_size as f64;
    let boundary = seg.boundary_size() as f64;
    let (bw, bh) = (seg.bbox.width() as f64, seg.bbox.height() as f64);
    Ok(MetaFeatures([
        size,
        interior,
        boundary,
        boundary / size,
        stats.mean,
        stats.variance,
        stats.mean_boundary,
        stats.mean_interior,
        stats.mean_interior - stats.mean_boundary,
        seg.center.v / hh,
        seg.center.h / ww,
        bw / ww,
        bh / hh,
        bw / bh,
        touches_roi_border(seg, roi) as u8 as f64,
    ]))
}

/// A predicted segment is a true positive iff it covers at least one
/// ground-truth OOD pixel.
pub fn label_segments_for_training(segs: &[Segment], truth: &FrameTruth) -> Result<Vec<bool>> {
    segs.iter()
        .map(|seg| {
            seg.pixels
                .check_bounds(truth.height(), truth.width())
                .map_err(|_| {
                    Error::SizeMismatch(format!(
                        "segment {} exceeds {}x{} truth",
                        seg.segment_id,
                        truth.height(),
                        truth.width()
                    ))
                })?;
            Ok(seg
                .pixels
                .indices(truth.width())
                .any(|i| truth.semantic()[i] == Label::Ood))
        })
        .collect()
}
