//! Segment-wise TP/FN/FP counting with the adjusted sIoU.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::check_aligned;
use crate::model::{FrameTruth, PixelSet, Segment};

/// `0.25, 0.30, …, 0.75`.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..=10).map(|i| (25 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KappaRow {
    pub kappa: f64,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SegmentEvalResult {
    pub per_kappa: Vec<KappaRow>,
    pub f1_bar: f64,
}

/// Ground-truth side IoU in which pixels of other GT objects are left out of
/// the union. `preds` are all predicted segments of the frame; only those
/// intersecting `gt` take part.
pub fn adjusted_siou(gt: &PixelSet, preds: &[PixelSet], other_gt: &PixelSet) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGt);
    }
    let k_hat = preds
        .iter()
        .filter(|p| p.intersects(gt))
        .fold(PixelSet::new(), |acc, p| acc.union(p));
    let inter = gt.intersection_len(&k_hat);
    if inter == 0 {
        return Ok(0.0);
    }
    let union = gt.union(&k_hat).difference(other_gt).len();
    Ok(inter as f64 / union as f64)
}

/// κ-independent per-frame quantities: one sIoU per GT object and one
/// precision per (ROI-restricted, non-empty) predicted segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSegmentScores {
    pub siou: Vec<f64>,
    pub precision: Vec<f64>,
}

pub fn frame_segment_scores(preds: &[Segment], truth: &FrameTruth) -> Result<FrameSegmentScores> {
    let void = truth.void_pixels();
    let ood = truth.ood_pixels();
    let mut restricted = Vec::with_capacity(preds.len());
    for p in preds {
        p.pixels.check_bounds(truth.height(), truth.width())?;
        let r = p.pixels.difference(&void);
        if !r.is_empty() {
            restricted.push(r);
        }
    }
    let mut siou = Vec::new();
    for obj in truth.objects() {
        let other = ood.difference(&obj.pixels);
        siou.push(adjusted_siou(&obj.pixels, &restricted, &other)?);
    }
    let precision = restricted
        .iter()
        .map(|r| r.intersection_len(&ood) as f64 / r.len() as f64)
        .collect();
    Ok(FrameSegmentScores { siou, precision })
}

fn f1(tp: u64, fn_: u64, fp: u64) -> f64 {
    let den = 2 * tp + fn_ + fp;
    if den == 0 {
        1.0
    } else {
        2.0 * tp as f64 / den as f64
    }
}

/// Reduces per-frame scores to per-κ counts.
pub fn summarize(frames: &[FrameSegmentScores], kappa_grid: &[f64]) -> Result<SegmentEvalResult> {
    if kappa_grid.is_empty() || kappa_grid.iter().any(|k| !(0.0..1.0).contains(k)) {
        return Err(Error::InvalidConfig(format!("kappa grid must be non-empty within [0,1): {kappa_grid:?}")));
    }
    let per_kappa: Vec<KappaRow> = kappa_grid
        .iter()
        .map(|&kappa| {
            let (mut tp, mut fn_, mut fp) = (0, 0, 0);
            for f in frames {
                let hit = f.siou.iter().filter(|&&s| s > kappa).count() as u64;
                tp += hit;
                fn_ += f.siou.len() as u64 - hit;
                fp += f.precision.iter().filter(|&&p| p <= kappa).count() as u64;
            }
            KappaRow {
                kappa,
                tp,
                fn_,
                fp,
                f1: f1(tp, fn_, fp),
            }
        })
        .collect();
    let f1_bar = per_kappa.iter().map(|r| r.f1).sum::<f64>() / per_kappa.len() as f64;
    Ok(SegmentEvalResult { per_kappa, f1_bar })
}

/// Per-κ TP/FN/FP and F1 over all frames, and their mean F1.
///
/// A GT object is a TP when its adjusted sIoU exceeds κ. A predicted segment
/// is an FP when at most a fraction κ of its (non-VOID) pixels are OOD.
/// Predicted pixels on VOID are discarded first. F1 is 1 when there is
/// nothing to find and nothing was predicted.
pub fn segment_metrics(preds: &[Vec<Segment>], truths: &[FrameTruth], kappa_grid: &[f64]) -> Result<SegmentEvalResult> {
    check_aligned(preds.len(), truths.len(), "prediction frames")?;
    let frames: Vec<FrameSegmentScores> = preds
        .par_iter()
        .zip(truths)
        .map(|(p, t)| frame_segment_scores(p, t))
        .collect::<Result<_>>()?;
    summarize(&frames, kappa_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Label, Pixel};

    fn set(px: &[(u32, u32)]) -> PixelSet {
        px.iter().map(|&(r, c)| Pixel::new(r, c)).collect()
    }

    /// 1x6 frame: instance 1 on cols 0-1, instance 2 on cols 3-4.
    fn two_objects() -> FrameTruth {
        let inst = vec![1, 1, 0, 2, 2, 0];
        let sem = inst.iter().map(|&i| if i > 0 { Label::Ood } else { Label::NotOod }).collect();
        let class = inst.iter().map(|&i| (i > 0) as u16).collect();
        FrameTruth::new(1, 6, sem, inst, class, None).unwrap()
    }

    fn seg(id: u32, px: &[(u32, u32)]) -> Segment {
        Segment::new(id, 0, set(px), 0.9).unwrap()
    }

    #[test]
    fn siou_examples() {
        let gt = set(&[(0, 0), (0, 1)]);
        assert_eq!(adjusted_siou(&gt, &[gt.clone()], &PixelSet::new()).unwrap(), 1.0);
        assert_eq!(adjusted_siou(&gt, &[set(&[(5, 5)])], &PixelSet::new()).unwrap(), 0.0);
        // prediction spans both objects; the other object is removed from the union
        let other = set(&[(0, 3), (0, 4)]);
        let wide = set(&(0..5).map(|c| (0, c)).collect::<Vec<_>>());
        assert!((adjusted_siou(&gt, &[wide], &other).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(adjusted_siou(&PixelSet::new(), &[], &other), Err(Error::EmptyGt)));
    }

    #[test]
    fn perfect_predictions() {
        let t = two_objects();
        let preds = vec![vec![seg(1, &[(0, 0), (0, 1)]), seg(2, &[(0, 3), (0, 4)])]];
        let r = segment_metrics(&preds, &[t], &default_kappa_grid()).unwrap();
        assert_eq!(r.f1_bar, 1.0);
        assert!(r.per_kappa.iter().all(|k| k.tp == 2 && k.fn_ == 0 && k.fp == 0));
    }

    #[test]
    fn no_predictions() {
        let r = segment_metrics(&[vec![]], &[two_objects()], &default_kappa_grid()).unwrap();
        assert_eq!(r.f1_bar, 0.0);
        assert!(r.per_kappa.iter().all(|k| k.fn_ == 2));
    }

    #[test]
    fn kappa_grid_checked() {
        assert!(segment_metrics(&[vec![]], &[two_objects()], &[1.0]).is_err());
        assert!(segment_metrics(&[vec![]], &[two_objects()], &[]).is_err());
        assert_eq!(default_kappa_grid().len(), 11);
    }
}
