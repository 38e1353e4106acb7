//! End-to-end stages over a [`Dataset`] and the JSON documents they exchange.
//!
//! Every stage document carries `schemaVersion`. A run directory holds one
//! `<stage>.json` per executed stage.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster_metrics::{assign_gt, cluster_scores, ClusterScores};
use crate::error::{Error, Result};
use crate::io::{read_feature_file, Dataset, SequenceEntry};
use crate::meta::protocol::ProtocolOutcome;
use crate::meta::{extract_meta_features, label_segments_for_training, MetaSample, MetaSequence};
use crate::metrics::{
    default_kappa_grid, grouped_report, pixel_metrics, segment_metrics, GroupBy, GroupReport, PixelEvalResult,
    SegmentEvalResult,
};
use crate::model::{ClusterAssignment, EmbeddingPoint, FrameTruth, ScoreMap, Segment, SequencePrediction};
use crate::retrieval::{builtin_descriptor, crop_box, dbscan_cluster, embed, filter_by_track_length, DbscanConfig, RetrievalConfig};
use crate::segmentation::{extract_segments, Mask};
use crate::tracker::{track_sequence, TrackerConfig};
use crate::tracking_eval::{evaluate_tracking, TrackingEvalResult};

pub const STAGE_SCHEMA_VERSION: u32 = 1;

/// Region of interest of a frame: the ROI mask when given, else the
/// non-VOID area of the ground truth, else the whole frame.
pub fn roi_mask(ds: &Dataset, seq: &SequenceEntry, frame: usize, score: &ScoreMap) -> Result<Mask> {
    let f = &seq.frames[frame];
    let (h, w) = (score.height(), score.width());
    if let Some(bits) = ds.roi(f)? {
        return Mask::new(h, w, bits);
    }
    if let Some(t) = ds.truth(f)? {
        return Mask::new(h, w, t.roi());
    }
    Ok(Mask::full(h, w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectedSequence {
    pub sequence_id: String,
    pub height: u32,
    pub width: u32,
    /// Indexed by frame; frames missing from the manifest stay empty.
    pub frames: Vec<Vec<Segment>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectOutput {
    pub schema_version: u32,
    pub tau: f64,
    pub min_size: usize,
    pub sequences: Vec<DetectedSequence>,
}

fn detect_sequence(ds: &Dataset, seq: &SequenceEntry, tau: f64, min_size: usize) -> Result<DetectedSequence> {
    let per_frame: Vec<(u32, u32, u32, Vec<Segment>)> = (0..seq.frames.len())
        .into_par_iter()
        .map(|i| {
            let f = &seq.frames[i];
            let score = ds.score_map(f)?;
            let roi = roi_mask(ds, seq, i, &score)?;
            let segs = extract_segments(&score, &roi, tau, min_size, f.frame_index)?;
            Ok((f.frame_index, score.height(), score.width(), segs))
        })
        .collect::<Result<_>>()?;
    let (height, width) = per_frame.first().map_or((0, 0), |p| (p.1, p.2));
    if per_frame.iter().any(|p| (p.1, p.2) != (height, width)) {
        return Err(Error::SizeMismatch(format!("frame sizes vary within {}", seq.sequence_id)));
    }
    let mut frames = vec![Vec::new(); seq.frame_count() as usize];
    for (t, _, _, segs) in per_frame {
        frames[t as usize] = segs;
    }
    Ok(DetectedSequence {
        sequence_id: seq.sequence_id.clone(),
        height,
        width,
        frames,
    })
}

/// Thresholds every score map and extracts connected segments.
pub fn detect(ds: &Dataset, tau: f64, min_size: usize) -> Result<DetectOutput> {
    ds.manifest.validate()?;
    let sequences = ds
        .manifest
        .sequences
        .par_iter()
        .map(|s| detect_sequence(ds, s, tau, min_size))
        .collect::<Result<_>>()?;
    Ok(DetectOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        tau,
        min_size,
        sequences,
    })
}

/// Tracker thresholds that were left unset fall back to the image-relative
/// defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackerOverrides {
    pub aggregation_dist: Option<f64>,
    pub center_dist: Option<f64>,
    pub min_iou: Option<f64>,
    pub regression_window: Option<u32>,
    pub max_gap: Option<u32>,
}

impl TrackerOverrides {
    pub fn resolve(&self, height: u32, width: u32) -> TrackerConfig {
        let d = TrackerConfig::for_frame(height, width);
        TrackerConfig {
            aggregation_dist: self.aggregation_dist.unwrap_or(d.aggregation_dist),
            center_dist: self.center_dist.unwrap_or(d.center_dist),
            min_iou: self.min_iou.unwrap_or(d.min_iou),
            regression_window: self.regression_window.unwrap_or(d.regression_window),
            max_gap: self.max_gap.unwrap_or(d.max_gap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackOutput {
    pub schema_version: u32,
    pub seed: u64,
    pub configs: BTreeMap<String, TrackerConfig>,
    pub sequences: Vec<SequencePrediction>,
}

pub fn track(detected: &[DetectedSequence], overrides: &TrackerOverrides, seed: u64) -> Result<TrackOutput> {
    let mut configs = BTreeMap::new();
    for d in detected {
        let cfg = overrides.resolve(d.height.max(1), d.width.max(1));
        cfg.validate()?;
        configs.insert(d.sequence_id.clone(), cfg);
    }
    let sequences = detected
        .par_iter()
        .map(|d| track_sequence(&d.sequence_id, d.frames.clone(), &configs[&d.sequence_id], seed))
        .collect();
    Ok(TrackOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        seed,
        configs,
        sequences,
    })
}

fn find_sequence<'a>(ds: &'a Dataset, id: &str) -> Result<&'a SequenceEntry> {
    ds.manifest
        .sequence(id)
        .ok_or_else(|| Error::InvalidManifest(format!("sequence {id} is not in the manifest")))
}

/// Features and TP labels of every segment on a labeled frame.
pub fn meta_sequences(ds: &Dataset, detected: &[DetectedSequence]) -> Result<Vec<MetaSequence>> {
    detected
        .par_iter()
        .map(|d| {
            let seq = find_sequence(ds, &d.sequence_id)?;
            let mut samples = Vec::new();
            for (i, f) in seq.frames.iter().enumerate() {
                let Some(truth) = ds.truth(f)? else { continue };
                let segs = &d.frames[f.frame_index as usize];
                let score = ds.score_map(f)?;
                let roi = roi_mask(ds, seq, i, &score)?;
                let labels = label_segments_for_training(segs, &truth)?;
                for (s, is_tp) in segs.iter().zip(labels) {
                    samples.push(MetaSample {
                        frame_index: f.frame_index,
                        segment_id: s.segment_id,
                        features: extract_meta_features(s, &score, &roi)?,
                        is_tp,
                    });
                }
            }
            Ok(MetaSequence {
                sequence_id: d.sequence_id.clone(),
                samples,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetaTrainOutput {
    pub schema_version: u32,
    pub outcome: ProtocolOutcome,
}

/// Keeps, per sequence, the segments its assigned model accepts. Sequences
/// without an assigned model use the first model.
pub fn meta_apply(ds: &Dataset, detect: &DetectOutput, outcome: &ProtocolOutcome) -> Result<DetectOutput> {
    if outcome.models.is_empty() {
        return Err(Error::InvalidConfig("meta training output holds no model".into()));
    }
    for m in &outcome.models {
        m.model.validate()?;
    }
    let sequences = detect
        .sequences
        .par_iter()
        .map(|d| {
            let idx = outcome
                .sequences
                .iter()
                .find(|s| s.sequence_id == d.sequence_id)
                .map_or(0, |s| s.model_index);
            let model = &outcome
                .models
                .get(idx)
                .ok_or_else(|| Error::InvalidConfig(format!("model index {idx} out of range")))?
                .model;
            let seq = find_sequence(ds, &d.sequence_id)?;
            let mut frames = vec![Vec::new(); d.frames.len()];
            for (i, f) in seq.frames.iter().enumerate() {
                let t = f.frame_index as usize;
                let score = ds.score_map(f)?;
                let roi = roi_mask(ds, seq, i, &score)?;
                frames[t] = crate::meta::apply_meta(model, &d.frames[t], &score, &roi)?;
            }
            Ok(DetectedSequence {
                frames,
                ..d.clone()
            })
        })
        .collect::<Result<_>>()?;
    Ok(DetectOutput {
        sequences,
        ..detect.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmbedOutput {
    pub schema_version: u32,
    pub config: RetrievalConfig,
    pub feature_source: String,
    pub points: Vec<EmbeddingPoint>,
}

/// Descriptor vectors for the segments kept by the track-length filter.
///
/// With `features_dir`, vectors come from `<dir>/<sequenceId>.oodf`;
/// otherwise the built-in descriptor runs on frame-image crops. GT class and
/// instance are attached on labeled frames.
pub fn collect_descriptors(
    ds: &Dataset,
    preds: &[SequencePrediction],
    min_track_length: usize,
    features_dir: Option<&Path>,
) -> Result<(Vec<EmbeddingPoint>, Vec<Vec<f64>>)> {
    let per_seq: Vec<Vec<(EmbeddingPoint, Vec<f64>)>> = preds
        .par_iter()
        .map(|pred| {
            let seq = find_sequence(ds, &pred.sequence_id)?;
            let by_frame: BTreeMap<u32, &crate::io::FrameEntry> =
                seq.frames.iter().map(|f| (f.frame_index, f)).collect();
            let table = match features_dir {
                Some(dir) => Some(read_feature_file(dir.join(format!("{}.oodf", pred.sequence_id)))?.to_map()),
                None => None,
            };
            let mut out = Vec::new();
            let mut cache: Option<(u32, Option<crate::model::RgbImage>, Option<FrameTruth>)> = None;
            for origin in filter_by_track_length(pred, min_track_length) {
                let t = origin.frame_index;
                let seg = pred.frames[t as usize]
                    .iter()
                    .find(|s| s.segment_id == origin.segment_id)
                    .expect("origin comes from this prediction");
                let entry = by_frame
                    .get(&t)
                    .ok_or_else(|| Error::InvalidManifest(format!("frame {t} missing in {}", pred.sequence_id)))?;
                if cache.as_ref().is_none_or(|c| c.0 != t) {
                    let image = if table.is_none() { ds.image(entry)? } else { None };
                    cache = Some((t, image, ds.truth(entry)?));
                }
                let (_, image, truth) = cache.as_ref().unwrap();
                let vector: Vec<f64> = match &table {
                    Some(map) => map
                        .get(&(t, origin.segment_id))
                        .ok_or_else(|| {
                            Error::MissingMetadata(format!(
                                "no feature record for frame {t} segment {} in {}",
                                origin.segment_id, pred.sequence_id
                            ))
                        })?
                        .iter()
                        .map(|&v| v as f64)
                        .collect(),
                    None => {
                        let image = image.as_ref().ok_or_else(|| {
                            Error::MissingMetadata(format!("frame {t} of {} has no image", pred.sequence_id))
                        })?;
                        builtin_descriptor(&image.crop(&crop_box(seg)?)?)
                    }
                };
                let gt = match truth {
                    Some(tr) => assign_gt(seg, tr)?,
                    None => None,
                };
                out.push((
                    EmbeddingPoint {
                        coords: [0.0, 0.0],
                        origin,
                        gt_class: gt.map(|g| g.0),
                        gt_instance: gt.map(|g| g.1),
                    },
                    vector,
                ));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_seq.into_iter().flatten().unzip())
}

/// Filters, describes and embeds tracked segments in 2D.
pub fn embed_tracks(
    ds: &Dataset,
    preds: &[SequencePrediction],
    cfg: &RetrievalConfig,
    features_dir: Option<&Path>,
) -> Result<EmbedOutput> {
    let (mut points, vectors) = collect_descriptors(ds, preds, cfg.min_track_length, features_dir)?;
    let coords = embed(&vectors, cfg)?;
    for (p, c) in points.iter_mut().zip(coords) {
        p.coords = c;
    }
    Ok(EmbedOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        config: *cfg,
        feature_source: if features_dir.is_some() { "oodf" } else { "builtin" }.to_string(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterOutput {
    pub schema_version: u32,
    pub min_track_length: usize,
    pub dbscan: DbscanConfig,
    pub assignment: ClusterAssignment,
}

pub fn cluster(embedding: &EmbedOutput, cfg: &DbscanConfig) -> Result<ClusterOutput> {
    let coords: Vec<[f64; 2]> = embedding.points.iter().map(|p| p.coords).collect();
    let labels = dbscan_cluster(&coords, cfg)?;
    Ok(ClusterOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        min_track_length: embedding.config.min_track_length,
        dbscan: *cfg,
        assignment: ClusterAssignment::new(embedding.points.clone(), labels)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub pixel: bool,
    pub segment: bool,
    pub tracking: bool,
    pub group_by: Option<GroupBy>,
    pub kappa_grid: Vec<f64>,
    pub count_false_positive_class: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            pixel: true,
            segment: true,
            tracking: true,
            group_by: None,
            kappa_grid: default_kappa_grid(),
            count_false_positive_class: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusteringEval {
    pub min_track_length: usize,
    pub scores: ClusterScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluateOutput {
    pub schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel: Option<PixelEvalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<SegmentEvalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingEvalResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusteringEval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_by: Option<GroupBy>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub groups: Vec<GroupReport>,
}

/// Ground truth of every frame in a sequence, `None` where unlabeled.
pub fn load_truths(ds: &Dataset, seq: &SequenceEntry) -> Result<Vec<Option<FrameTruth>>> {
    let mut out = vec![None; seq.frame_count() as usize];
    let loaded: Vec<(u32, Option<FrameTruth>)> = seq
        .frames
        .par_iter()
        .map(|f| Ok((f.frame_index, ds.truth(f)?)))
        .collect::<Result<_>>()?;
    for (t, truth) in loaded {
        out[t as usize] = truth;
    }
    Ok(out)
}

/// Computes the requested metric families.
///
/// Pixel metrics need only the dataset. Segment metrics use `segments` when
/// given, else the frames of `tracks`. Tracking metrics need `tracks`;
/// clustering scores need `clusters`.
pub fn evaluate(
    ds: &Dataset,
    segments: Option<&DetectOutput>,
    tracks: Option<&TrackOutput>,
    clusters: Option<&ClusterOutput>,
    opts: &EvaluateOptions,
) -> Result<EvaluateOutput> {
    ds.manifest.validate()?;
    let truths: BTreeMap<&str, Vec<Option<FrameTruth>>> = ds
        .manifest
        .sequences
        .iter()
        .map(|s| Ok((s.sequence_id.as_str(), load_truths(ds, s)?)))
        .collect::<Result<_>>()?;

    let seg_frames: Option<BTreeMap<&str, &Vec<Vec<Segment>>>> = match (segments, tracks) {
        (Some(d), _) => Some(d.sequences.iter().map(|s| (s.sequence_id.as_str(), &s.frames)).collect()),
        (None, Some(t)) => Some(t.sequences.iter().map(|s| (s.sequence_id.as_str(), &s.frames)).collect()),
        _ => None,
    };

    // labeled frames flattened in manifest order
    let mut scores: Vec<ScoreMap> = Vec::new();
    let mut flat_truths: Vec<FrameTruth> = Vec::new();
    let mut flat_preds: Vec<Vec<Segment>> = Vec::new();
    let need_scores = opts.pixel || opts.group_by.is_some();
    for seq in &ds.manifest.sequences {
        let seq_truths = &truths[seq.sequence_id.as_str()];
        for f in &seq.frames {
            let Some(truth) = &seq_truths[f.frame_index as usize] else { continue };
            if need_scores {
                scores.push(ds.score_map(f)?);
            }
            flat_truths.push(truth.clone());
            if let Some(sf) = &seg_frames {
                let frames = sf.get(seq.sequence_id.as_str()).ok_or_else(|| {
                    Error::InvalidManifest(format!("no predictions for sequence {}", seq.sequence_id))
                })?;
                flat_preds.push(frames.get(f.frame_index as usize).cloned().unwrap_or_default());
            }
        }
    }

    let pixel = if opts.pixel { Some(pixel_metrics(&scores, &flat_truths)?) } else { None };
    let segment = match (&seg_frames, opts.segment) {
        (Some(_), true) => Some(segment_metrics(&flat_preds, &flat_truths, &opts.kappa_grid)?),
        (None, true) => return Err(Error::MissingMetadata("segment metrics need segments or tracks".into())),
        _ => None,
    };
    let tracking = match (tracks, opts.tracking) {
        (Some(t), true) => {
            let pairs: Vec<(&SequencePrediction, &[Option<FrameTruth>])> = t
                .sequences
                .iter()
                .map(|p| {
                    let tr = truths.get(p.sequence_id.as_str()).ok_or_else(|| {
                        Error::InvalidManifest(format!("sequence {} is not in the manifest", p.sequence_id))
                    })?;
                    Ok((p, tr.as_slice()))
                })
                .collect::<Result<_>>()?;
            Some(evaluate_tracking(&pairs)?)
        }
        (None, true) => return Err(Error::MissingMetadata("tracking metrics need tracks".into())),
        _ => None,
    };
    let clustering = clusters.map(|c| ClusteringEval {
        min_track_length: c.min_track_length,
        scores: cluster_scores(&c.assignment, opts.count_false_positive_class),
    });
    let groups = match opts.group_by {
        Some(by) => {
            if seg_frames.is_none() {
                return Err(Error::MissingMetadata("grouped metrics need segments or tracks".into()));
            }
            grouped_report(&scores, &flat_preds, &flat_truths, by, &opts.kappa_grid)?
        }
        None => Vec::new(),
    };
    Ok(EvaluateOutput {
        schema_version: STAGE_SCHEMA_VERSION,
        pixel,
        segment,
        tracking,
        clustering,
        group_by: opts.group_by,
        groups,
    })
}

/// Runs retrieval at several track-length filters on already computed
/// tracks and returns the cluster scores for each.
pub fn retrieval_scores(
    ds: &Dataset,
    preds: &[SequencePrediction],
    cfg: &RetrievalConfig,
    min_track_lengths: &[usize],
    count_false_positive_class: bool,
) -> Result<Vec<(usize, ClusterScores)>> {
    min_track_lengths
        .iter()
        .map(|&ell| {
            let c = RetrievalConfig {
                min_track_length: ell,
                ..*cfg
            };
            let emb = embed_tracks(ds, preds, &c, None)?;
            let cl = cluster(&emb, &c.dbscan)?;
            Ok((ell, cluster_scores(&cl.assignment, count_false_positive_class)))
        })
        .collect()
}
