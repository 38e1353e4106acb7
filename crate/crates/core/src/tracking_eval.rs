//! CLEAR-MOT style evaluation of predicted tracks against GT instances,
//! plus the tracking length l_t which also credits unlabeled frames.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{geometric_center, mask_iou, FrameTruth, GtObject, PixelSet, SequencePrediction};

pub const MOSTLY_TRACKED: f64 = 0.8;
pub const MOSTLY_LOST: f64 = 0.2;

/// A prediction as seen by the matcher: its track and ROI-restricted pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedMask {
    pub track_id: u32,
    pub segment_id: u32,
    pub pixels: PixelSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchedPair {
    pub instance: u16,
    pub track_id: u32,
    pub segment_id: u32,
    pub iou: f64,
    /// Distance between GT and predicted geometric centers (px).
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameMatch {
    pub frame_index: u32,
    pub gt_instances: Vec<u16>,
    pub pairs: Vec<MatchedPair>,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub mme: u64,
}

/// Matches one labeled frame.
///
/// Pairs from `prev` (GT instance → track of the previous labeled frame)
/// are kept while they still overlap. Remaining pairs with IoU > 0 are taken
/// greedily by descending IoU, then GT instance, then prediction index.
/// `last_track` holds each GT object's most recent matched track across the
/// whole sequence and is updated; a change there counts one mismatch.
pub fn match_frame(
    frame_index: u32,
    gts: &[GtObject],
    preds: &[TrackedMask],
    prev: &BTreeMap<u16, u32>,
    last_track: &mut BTreeMap<u16, u32>,
) -> FrameMatch {
    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut chosen: Vec<(usize, usize, f64)> = Vec::new();

    let iou: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| preds.iter().map(|p| mask_iou(&g.pixels, &p.pixels)).collect())
        .collect();

    for (gi, g) in gts.iter().enumerate() {
        let Some(&track) = prev.get(&g.instance) else {
            continue;
        };
        if let Some(pi) = (0..preds.len()).find(|&pi| !pred_used[pi] && preds[pi].track_id == track && iou[gi][pi] > 0.0) {
            gt_used[gi] = true;
            pred_used[pi] = true;
            chosen.push((gi, pi, iou[gi][pi]));
        }
    }

    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for gi in (0..gts.len()).filter(|&g| !gt_used[g]) {
        for pi in (0..preds.len()).filter(|&p| !pred_used[p]) {
            if iou[gi][pi] > 0.0 {
                cands.push((iou[gi][pi], gi, pi));
            }
        }
    }
    cands.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(gts[a.1].instance.cmp(&gts[b.1].instance))
            .then(a.2.cmp(&b.2))
    });
    for (v, gi, pi) in cands {
        if !gt_used[gi] && !pred_used[pi] {
            gt_used[gi] = true;
            pred_used[pi] = true;
            chosen.push((gi, pi, v));
        }
    }

    chosen.sort_by_key(|&(gi, _, _)| gts[gi].instance);
    let mut mme = 0;
    let pairs = chosen
        .into_iter()
        .map(|(gi, pi, v)| {
            let (g, p) = (&gts[gi], &preds[pi]);
            if let Some(old) = last_track.insert(g.instance, p.track_id) {
                if old != p.track_id {
                    mme += 1;
                }
            }
            let pc = geometric_center(&p.pixels).expect("restricted predictions are non-empty");
            MatchedPair {
                instance: g.instance,
                track_id: p.track_id,
                segment_id: p.segment_id,
                iou: v,
                distance: g.center.distance(&pc),
            }
        })
        .collect::<Vec<_>>();
    FrameMatch {
        frame_index,
        gt_instances: gts.iter().map(|g| g.instance).collect(),
        fp: pred_used.iter().filter(|u| !**u).count() as u64,
        fn_: gt_used.iter().filter(|u| !**u).count() as u64,
        mme,
        pairs,
    }
}

/// Predicted masks of one frame with VOID pixels removed. Segments lying
/// entirely on VOID are dropped.
pub fn tracked_masks(pred: &SequencePrediction, frame: usize, truth: &FrameTruth) -> Result<Vec<TrackedMask>> {
    let lookup = pred.track_lookup();
    let void = truth.void_pixels();
    let mut out = Vec::new();
    for seg in &pred.frames[frame] {
        seg.pixels.check_bounds(truth.height(), truth.width())?;
        let pixels = seg.pixels.difference(&void);
        if pixels.is_empty() {
            continue;
        }
        let track_id = *lookup.get(&(frame as u32, seg.segment_id)).ok_or_else(|| {
            Error::InvalidManifest(format!("segment {} in frame {frame} has no track", seg.segment_id))
        })?;
        out.push(TrackedMask {
            track_id,
            segment_id: seg.segment_id,
            pixels,
        });
    }
    Ok(out)
}

/// Matches every labeled frame (`Some` truth) of one sequence in order.
pub fn match_frames(pred: &SequencePrediction, truths: &[Option<FrameTruth>]) -> Result<Vec<FrameMatch>> {
    if truths.len() != pred.frames.len() {
        return Err(Error::DimMismatch(format!(
            "{} truth frames vs {} predicted frames in {}",
            truths.len(),
            pred.frames.len(),
            pred.sequence_id
        )));
    }
    let mut prev = BTreeMap::new();
    let mut last_track = BTreeMap::new();
    let mut out = Vec::new();
    for (t, truth) in truths.iter().enumerate() {
        let Some(truth) = truth else { continue };
        let preds = tracked_masks(pred, t, truth)?;
        let m = match_frame(t as u32, &truth.objects(), &preds, &prev, &mut last_track);
        prev = m.pairs.iter().map(|p| (p.instance, p.track_id)).collect();
        out.push(m);
    }
    Ok(out)
}

/// `(mota, mme ratio, motp)` over all frames. MOTP averages the center
/// distance over all matched pairs and is `None` without any.
pub fn mota_motp(matches: &[FrameMatch]) -> Result<(f64, f64, Option<f64>)> {
    let g: u64 = matches.iter().map(|m| m.gt_instances.len() as u64).sum();
    if g == 0 {
        return Err(Error::NoGtObjects);
    }
    let errors: u64 = matches.iter().map(|m| m.fp + m.fn_ + m.mme).sum();
    let mme: u64 = matches.iter().map(|m| m.mme).sum();
    let dists: Vec<f64> = matches.iter().flat_map(|m| m.pairs.iter().map(|p| p.distance)).collect();
    let motp = (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64);
    Ok((1.0 - errors as f64 / g as f64, mme as f64 / g as f64, motp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Coverage {
    MostlyTracked,
    PartiallyTracked,
    MostlyLost,
}

pub fn coverage_class(tracked_fraction: f64) -> Coverage {
    if tracked_fraction >= MOSTLY_TRACKED {
        Coverage::MostlyTracked
    } else if tracked_fraction < MOSTLY_LOST {
        Coverage::MostlyLost
    } else {
        Coverage::PartiallyTracked
    }
}

/// Tracking length of one GT instance.
///
/// Labeled frames count when the object occurs (denominator) and is matched
/// (numerator). Between two consecutive labeled frames that both contain the
/// object, the unlabeled frames in between join the denominator; if the
/// object was matched to track k in the earlier one, the unlabeled frames
/// where k keeps appearing without interruption join the numerator.
pub fn tracking_length(instance: u16, matches: &[FrameMatch], pred: &SequencePrediction) -> f64 {
    let track_frames: Vec<HashSet<u32>> = {
        let lookup = pred.track_lookup();
        pred.frames
            .iter()
            .enumerate()
            .map(|(t, segs)| {
                segs.iter()
                    .filter_map(|s| lookup.get(&(t as u32, s.segment_id)).copied())
                    .collect()
            })
            .collect()
    };
    let mut num = 0usize;
    let mut den = 0usize;
    for (i, m) in matches.iter().enumerate() {
        if !m.gt_instances.contains(&instance) {
            continue;
        }
        den += 1;
        let matched = m.pairs.iter().find(|p| p.instance == instance).map(|p| p.track_id);
        if matched.is_some() {
            num += 1;
        }
        let Some(next) = matches.get(i + 1) else { continue };
        if !next.gt_instances.contains(&instance) {
            continue;
        }
        den += (next.frame_index - m.frame_index - 1) as usize;
        if let Some(k) = matched {
            num += (m.frame_index + 1..next.frame_index)
                .take_while(|&f| track_frames[f as usize].contains(&k))
                .count();
        }
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectTracking {
    pub sequence_id: String,
    pub instance: u16,
    pub occurrences: u64,
    pub matched: u64,
    pub tracked_fraction: f64,
    pub coverage: Coverage,
    pub lt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackingEvalResult {
    pub mota: f64,
    pub mme_ratio: f64,
    pub motp: Option<f64>,
    /// Number of GT objects (distinct instances per sequence).
    pub gt_count: u64,
    pub mt: u64,
    pub pt: u64,
    pub ml: u64,
    /// GT object-frames over all labeled frames.
    pub object_frames: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub mme: u64,
    pub lt_mean: f64,
    pub objects: Vec<ObjectTracking>,
}

/// Evaluates several sequences; each comes with one optional truth per frame.
pub fn evaluate_tracking(seqs: &[(&SequencePrediction, &[Option<FrameTruth>])]) -> Result<TrackingEvalResult> {
    let per_seq: Vec<(Vec<FrameMatch>, Vec<ObjectTracking>)> = seqs
        .par_iter()
        .map(|(pred, truths)| {
            let matches = match_frames(pred, truths)?;
            let instances: BTreeSet<u16> = matches.iter().flat_map(|m| m.gt_instances.iter().copied()).collect();
            let objects = instances
                .into_iter()
                .map(|inst| {
                    let occurrences = matches.iter().filter(|m| m.gt_instances.contains(&inst)).count() as u64;
                    let matched = matches
                        .iter()
                        .filter(|m| m.pairs.iter().any(|p| p.instance == inst))
                        .count() as u64;
                    let tracked_fraction = matched as f64 / occurrences as f64;
                    ObjectTracking {
                        sequence_id: pred.sequence_id.clone(),
                        instance: inst,
                        occurrences,
                        matched,
                        tracked_fraction,
                        coverage: coverage_class(tracked_fraction),
                        lt: tracking_length(inst, &matches, pred),
                    }
                })
                .collect();
            Ok((matches, objects))
        })
        .collect::<Result<_>>()?;

    let all: Vec<FrameMatch> = per_seq.iter().flat_map(|(m, _)| m.iter().cloned()).collect();
    let (mota, mme_ratio, motp) = mota_motp(&all)?;
    let objects: Vec<ObjectTracking> = per_seq.into_iter().flat_map(|(_, o)| o).collect();
    let count = |c: Coverage| objects.iter().filter(|o| o.coverage == c).count() as u64;
    Ok(TrackingEvalResult {
        mota,
        mme_ratio,
        motp,
        gt_count: objects.len() as u64,
        mt: count(Coverage::MostlyTracked),
        pt: count(Coverage::PartiallyTracked),
        ml: count(Coverage::MostlyLost),
        object_frames: all.iter().map(|m| m.gt_instances.len() as u64).sum(),
        fp: all.iter().map(|m| m.fp).sum(),
        fn_: all.iter().map(|m| m.fn_).sum(),
        mme: all.iter().map(|m| m.mme).sum(),
        lt_mean: objects.iter().map(|o| o.lt).sum::<f64>() / objects.len() as f64,
        objects,
    })
}
