//! Deterministic synthetic OOD sequences with exact ground truth.
//!
//! Objects move linearly over a gray background. Score maps are near zero
//! off-object and near 0.95 on-object, with optional noise, dropped
//! detections and false-positive blobs. Every frame is rendered from its own
//! RNG stream, so frames can be produced in any order.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{
    write_manifest, write_masks, write_rgb_png, write_roi_png, write_score_map, Dataset, DatasetManifest,
    FrameEntry, MaskPaths, SequenceEntry,
};
use crate::model::{FrameTruth, Label, Pixel, PixelSet, RgbImage, ScoreMap, SequencePrediction, Track};
use crate::segmentation::DEFAULT_TAU_SYNTHETIC;

pub const BACKGROUND_RGB: [u8; 3] = [128, 128, 128];
pub const ON_OBJECT_SCORE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Shape {
    Disk { radius: f64 },
    Rectangle { half_height: f64, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SynthObject {
    pub class_id: u16,
    pub shape: Shape,
    /// `(row, col)` at the entry frame.
    pub initial_center: [f64; 2],
    /// `(row, col)` displacement per frame.
    pub velocity: [f64; 2],
    pub color: [u8; 3],
    pub entry_frame: u32,
    /// First frame without the object; `None` keeps it to the end.
    #[serde(default)]
    pub exit_frame: Option<u32>,
}

impl SynthObject {
    pub fn center_at(&self, t: u32) -> [f64; 2] {
        let dt = t as f64 - self.entry_frame as f64;
        [
            self.initial_center[0] + self.velocity[0] * dt,
            self.initial_center[1] + self.velocity[1] * dt,
        ]
    }

    pub fn present_at(&self, t: u32) -> bool {
        t >= self.entry_frame && self.exit_frame.is_none_or(|e| t < e)
    }

    /// Pixels covered in frame `t`, clipped to the image.
    pub fn pixels_at(&self, t: u32, height: u32, width: u32) -> PixelSet {
        if !self.present_at(t) {
            return PixelSet::new();
        }
        let [cv, ch] = self.center_at(t);
        let (ev, eh) = match self.shape {
            Shape::Disk { radius } => (radius, radius),
            Shape::Rectangle { half_height, half_width } => (half_height, half_width),
        };
        let r0 = (cv - ev).floor().max(0.0) as i64;
        let r1 = ((cv + ev).ceil() as i64).min(height as i64 - 1);
        let c0 = (ch - eh).floor().max(0.0) as i64;
        let c1 = ((ch + eh).ceil() as i64).min(width as i64 - 1);
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                let (dv, dh) = (r as f64 - cv, c as f64 - ch);
                let inside = match self.shape {
                    Shape::Disk { radius } => dv * dv + dh * dh <= radius * radius,
                    Shape::Rectangle { half_height, half_width } => dv.abs() <= half_height && dh.abs() <= half_width,
                };
                if inside {
                    out.push(Pixel::new(r as u32, c as u32));
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SynthConfig {
    pub seed: u64,
    pub height: u32,
    pub width: u32,
    pub frame_count: u32,
    pub sequence_count: u32,
    pub objects: Vec<SynthObject>,
    pub score_noise_sigma: f64,
    /// Expected false-positive blobs per frame.
    pub fp_blob_rate: f64,
    pub fp_blob_radius: f64,
    pub drop_detection_prob: f64,
    pub labeled_every: u32,
    /// Width of the VOID band along the image border.
    pub void_border: u32,
    /// On-object scores never fall to or below this.
    pub tau: f64,
}

impl Default for SynthConfig {
    /// Three well separated objects of two classes over 20 frames, no noise.
    fn default() -> Self {
        let obj = |class_id, shape, c: [f64; 2], v: [f64; 2], color| SynthObject {
            class_id,
            shape,
            initial_center: c,
            velocity: v,
            color,
            entry_frame: 0,
            exit_frame: None,
        };
        Self {
            seed: 0,
            height: 96,
            width: 128,
            frame_count: 20,
            sequence_count: 1,
            objects: vec![
                obj(1, Shape::Disk { radius: 6.0 }, [20.0, 16.0], [0.5, 1.5], [220, 40, 40]),
                obj(
                    2,
                    Shape::Rectangle {
                        half_height: 5.0,
                        half_width: 8.0,
                    },
                    [50.0, 100.0],
                    [0.8, -1.2],
                    [40, 200, 60],
                ),
                obj(1, Shape::Disk { radius: 4.0 }, [75.0, 30.0], [-0.4, 1.0], [200, 60, 60]),
            ],
            score_noise_sigma: 0.0,
            fp_blob_rate: 0.0,
            fp_blob_radius: 2.0,
            drop_detection_prob: 0.0,
            labeled_every: 1,
            void_border: 4,
            tau: DEFAULT_TAU_SYNTHETIC,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.height == 0 || self.width == 0 || self.frame_count == 0 || self.sequence_count == 0 {
            return bad("image size, frame count and sequence count must be positive".into());
        }
        if self.labeled_every == 0 {
            return bad("labeledEvery must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.drop_detection_prob) {
            return bad(format!("dropDetectionProb {} outside [0,1]", self.drop_detection_prob));
        }
        if !(self.score_noise_sigma >= 0.0 && self.score_noise_sigma.is_finite())
            || !(self.fp_blob_rate >= 0.0 && self.fp_blob_rate.is_finite())
            || !(self.fp_blob_radius >= 0.0)
        {
            return bad("noise sigma and blob settings must be finite and non-negative".into());
        }
        if !(self.tau > 0.0 && self.tau < ON_OBJECT_SCORE) {
            return bad(format!("tau {} must lie in (0, {ON_OBJECT_SCORE})", self.tau));
        }
        if self.objects.len() > u16::MAX as usize {
            return bad("too many objects".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            let ext_ok = match o.shape {
                Shape::Disk { radius } => radius.is_finite() && radius >= 0.0,
                Shape::Rectangle { half_height, half_width } => {
                    half_height.is_finite() && half_width.is_finite() && half_height >= 0.0 && half_width >= 0.0
                }
            };
            let motion_ok = o.initial_center.iter().chain(&o.velocity).all(|v| v.is_finite());
            if !ext_ok || !motion_ok || o.class_id == 0 {
                return bad(format!("object {i}: needs finite geometry and class id > 0"));
            }
        }
        Ok(())
    }

    pub fn sequence_id(&self, seq: u32) -> String {
        format!("seq{seq:03}")
    }

    pub fn is_labeled(&self, t: u32) -> bool {
        t % self.labeled_every == 0
    }

    /// Depth in meters of image row `v`.
    pub fn depth_at_row(&self, v: u32) -> f64 {
        20.0 * (1.0 - v as f64 / self.height as f64) + 0.5
    }

    fn in_void_band(&self, r: u32, c: u32) -> bool {
        let b = self.void_border;
        r < b || c < b || r + b >= self.height || c + b >= self.width
    }
}

/// Everything rendered for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub score: ScoreMap,
    pub truth: FrameTruth,
    pub roi: Vec<bool>,
    pub image: RgbImage,
    /// Instance ids whose detection was dropped in this frame.
    pub dropped: Vec<u16>,
}

fn frame_rng(cfg: &SynthConfig, seq: u32, t: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((seq as u64) << 32) | t as u64);
    rng
}

pub fn render_frame(cfg: &SynthConfig, seq: u32, t: u32) -> Result<SynthFrame> {
    cfg.validate()?;
    let (h, w) = (cfg.height, cfg.width);
    let n = h as usize * w as usize;
    let idx = |p: Pixel| p.row as usize * w as usize + p.col as usize;
    let mut rng = frame_rng(cfg, seq, t);

    let mut semantic = vec![Label::NotOod; n];
    let mut instance = vec![0u16; n];
    let mut class_id = vec![0u16; n];
    let mut image = RgbImage::filled(h, w, BACKGROUND_RGB)?;
    for (k, obj) in cfg.objects.iter().enumerate() {
        for p in obj.pixels_at(t, h, w).iter() {
            let i = idx(p);
            semantic[i] = Label::Ood;
            instance[i] = k as u16 + 1;
            class_id[i] = obj.class_id;
            image.set_pixel(p.row, p.col, obj.color);
        }
    }
    for r in 0..h {
        for c in 0..w {
            if cfg.in_void_band(r, c) {
                let i = r as usize * w as usize + c as usize;
                semantic[i] = Label::Void;
                instance[i] = 0;
                class_id[i] = 0;
            }
        }
    }
    let roi: Vec<bool> = semantic.iter().map(|&l| l != Label::Void).collect();

    let dropped: Vec<u16> = (0..cfg.objects.len())
        .filter(|_| cfg.drop_detection_prob > 0.0 && rng.random::<f64>() < cfg.drop_detection_prob)
        .map(|k| k as u16 + 1)
        .collect();

    let whole = cfg.fp_blob_rate.floor() as usize;
    let extra = rng.random::<f64>() < cfg.fp_blob_rate.fract();
    let mut blob = vec![false; n];
    for _ in 0..whole + extra as usize {
        let cv = rng.random_range(0.0..h as f64);
        let ch = rng.random_range(0.0..w as f64);
        let disk = SynthObject {
            class_id: 1,
            shape: Shape::Disk {
                radius: cfg.fp_blob_radius,
            },
            initial_center: [cv, ch],
            velocity: [0.0, 0.0],
            color: BACKGROUND_RGB,
            entry_frame: 0,
            exit_frame: None,
        };
        for p in disk.pixels_at(0, h, w).iter() {
            let i = idx(p);
            if roi[i] && instance[i] == 0 {
                blob[i] = true;
            }
        }
    }

    let sigma = cfg.score_noise_sigma;
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let on_noise = Normal::new(0.0, (sigma / 4.0).max(f64::MIN_POSITIVE)).expect("valid sigma");
    let low = (cfg.tau + 1e-4).min(ON_OBJECT_SCORE);
    let scores: Vec<f32> = (0..n)
        .map(|i| {
            let detected = (instance[i] > 0 && !dropped.contains(&instance[i])) || blob[i];
            let v = if detected {
                let e = if sigma > 0.0 { on_noise.sample(&mut rng) } else { 0.0 };
                (ON_OBJECT_SCORE + e).clamp(low, 1.0)
            } else {
                let e = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                e.abs().min(0.999_999)
            };
            v as f32
        })
        .collect();

    let depth: Vec<f32> = (0..n).map(|i| cfg.depth_at_row((i / w as usize) as u32) as f32).collect();
    Ok(SynthFrame {
        score: ScoreMap::new(h, w, scores)?,
        truth: FrameTruth::new(h, w, semantic, instance, class_id, Some(depth))?,
        roi,
        image,
        dropped,
    })
}

/// Renders all frames of one sequence in memory.
pub fn render_sequence(cfg: &SynthConfig, seq: u32) -> Result<Vec<SynthFrame>> {
    (0..cfg.frame_count)
        .into_par_iter()
        .map(|t| render_frame(cfg, seq, t))
        .collect()
}

/// Writes every sequence under `out_dir` plus `manifest.json`. Ground-truth
/// masks are written for labeled frames only.
pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let mut sequences = Vec::new();
    for seq in 0..cfg.sequence_count {
        let sid = cfg.sequence_id(seq);
        let dir = out_dir.join(&sid);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let frames: Vec<FrameEntry> = (0..cfg.frame_count)
            .into_par_iter()
            .map(|t| {
                let f = render_frame(cfg, seq, t)?;
                let rel = |stem: &str, ext: &str| format!("{sid}/{stem}_{t:04}.{ext}");
                let labeled = cfg.is_labeled(t);
                let entry = FrameEntry {
                    frame_index: t,
                    score_path: rel("score", "oods"),
                    semantic_path: labeled.then(|| rel("semantic", "png")),
                    instance_path: labeled.then(|| rel("instance", "png")),
                    class_path: labeled.then(|| rel("class", "png")),
                    depth_path: labeled.then(|| rel("depth", "oods")),
                    roi_path: Some(rel("roi", "png")),
                    image_path: Some(rel("image", "png")),
                    labeled,
                };
                write_score_map(out_dir.join(&entry.score_path), &f.score)?;
                write_roi_png(out_dir.join(entry.roi_path.as_ref().unwrap()), cfg.height, cfg.width, &f.roi)?;
                write_rgb_png(out_dir.join(entry.image_path.as_ref().unwrap()), &f.image)?;
                if labeled {
                    let p = |s: &Option<String>| out_dir.join(s.as_ref().unwrap());
                    let (sem, inst, class, depth) = (
                        p(&entry.semantic_path),
                        p(&entry.instance_path),
                        p(&entry.class_path),
                        p(&entry.depth_path),
                    );
                    write_masks(
                        &MaskPaths {
                            semantic: &sem,
                            instance: &inst,
                            class: Some(&class),
                            depth: Some(&depth),
                        },
                        &f.truth,
                    )?;
                }
                Ok(entry)
            })
            .collect::<Result<_>>()?;
        sequences.push(SequenceEntry {
            sequence_id: sid,
            fps: None,
            frames,
        });
    }
    let manifest = DatasetManifest::new(sequences);
    write_manifest(out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Controlled corruptions for metric sensitivity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "op")]
pub enum PerturbOp {
    /// Zero the score maps of whole frames (dataset).
    #[serde(rename_all = "camelCase")]
    DropFrames { sequence_id: String, frames: Vec<u32> },
    /// Add Gaussian noise to every score, clamped to [0, 1] (dataset).
    #[serde(rename_all = "camelCase")]
    JitterScores { sigma: f64, seed: u64 },
    /// Give one track a fresh id from `from_frame` on (predictions).
    #[serde(rename_all = "camelCase")]
    SwapTrackIds {
        sequence_id: String,
        track_id: u32,
        from_frame: u32,
    },
    /// Remove single predicted segments (predictions).
    #[serde(rename_all = "camelCase")]
    DropDetections {
        sequence_id: String,
        detections: Vec<(u32, u32)>,
    },
}

pub const PERTURB_OPS: [&str; 4] = ["dropFrames", "jitterScores", "swapTrackIds", "dropDetections"];

impl PerturbOp {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbOp::DropFrames { .. } => PERTURB_OPS[0],
            PerturbOp::JitterScores { .. } => PERTURB_OPS[1],
            PerturbOp::SwapTrackIds { .. } => PERTURB_OPS[2],
            PerturbOp::DropDetections { .. } => PERTURB_OPS[3],
        }
    }

    /// Parses `{"op": name, ...}`; unknown names give [`Error::UnknownOp`].
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let name = v.get("op").and_then(|o| o.as_str()).unwrap_or_default();
        if !PERTURB_OPS.contains(&name) {
            return Err(Error::UnknownOp(name.to_string()));
        }
        Ok(serde_json::from_value(v)?)
    }
}

/// Applies a dataset-level op, writing changed score maps and a new
/// `manifest.json` into `out_dir`. Unchanged files are referenced by
/// absolute path.
pub fn perturb_dataset(ds: &Dataset, op: &PerturbOp, out_dir: &Path) -> Result<DatasetManifest> {
    if !matches!(op, PerturbOp::DropFrames { .. } | PerturbOp::JitterScores { .. }) {
        return Err(Error::UnknownOp(format!("{} does not apply to datasets", op.name())));
    }
    if let PerturbOp::JitterScores { sigma, .. } = op {
        if !(*sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("jitter sigma {sigma}")));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let abs = |rel: &str| -> Result<String> {
        let p = ds.resolve(rel);
        let p = std::fs::canonicalize(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p.to_string_lossy().into_owned())
    };
    let mut sequences = Vec::new();
    for (si, seq) in ds.manifest.sequences.iter().enumerate() {
        let mut frames = Vec::new();
        for f in &seq.frames {
            let mut e = f.clone();
            for p in [
                &mut e.semantic_path,
                &mut e.instance_path,
                &mut e.class_path,
                &mut e.depth_path,
                &mut e.roi_path,
                &mut e.image_path,
            ] {
                if let Some(rel) = p {
                    *rel = abs(rel)?;
                }
            }
            let new_scores = match op {
                PerturbOp::DropFrames { sequence_id, frames } if *sequence_id == seq.sequence_id && frames.contains(&f.frame_index) => {
                    let s = ds.score_map(f)?;
                    Some(ScoreMap::filled(s.height(), s.width(), 0.0)?)
                }
                PerturbOp::JitterScores { sigma, seed } => {
                    let s = ds.score_map(f)?;
                    if *sigma == 0.0 {
                        Some(s)
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        rng.set_stream(((si as u64) << 32) | f.frame_index as u64);
                        let normal = Normal::new(0.0, *sigma).expect("valid sigma");
                        let values = s
                            .values()
                            .iter()
                            .map(|&v| (v as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32)
                            .collect();
                        Some(ScoreMap::new(s.height(), s.width(), values)?)
                    }
                }
                _ => None,
            };
            match new_scores {
                Some(s) => {
                    let rel = format!("{}/score_{:04}.oods", seq.sequence_id, f.frame_index);
                    let path = out_dir.join(&rel);
                    if let Some(parent) = path.parent() {
                        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                    }
                    write_score_map(&path, &s)?;
                    e.score_path = rel;
                }
                None => e.score_path = abs(&f.score_path)?,
            }
            frames.push(e);
        }
        sequences.push(SequenceEntry {
            sequence_id: seq.sequence_id.clone(),
            fps: seq.fps,
            frames,
        });
    }
    let manifest = DatasetManifest::new(sequences);
    write_manifest(out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Applies a prediction-level op to the matching sequence; other sequences
/// pass through unchanged.
pub fn perturb_prediction(pred: &mut SequencePrediction, op: &PerturbOp) -> Result<()> {
    match op {
        PerturbOp::SwapTrackIds {
            sequence_id,
            track_id,
            from_frame,
        } => {
            if *sequence_id != pred.sequence_id {
                return Ok(());
            }
            let fresh = pred.tracks.iter().map(|t| t.track_id).max().unwrap_or(0) + 1;
            let Some(track) = pred.tracks.iter_mut().find(|t| t.track_id == *track_id) else {
                return Err(Error::InvalidConfig(format!("no track {track_id} in {sequence_id}")));
            };
            let moved = Track {
                track_id: fresh,
                entries: track.entries.iter().filter(|e| e.0 >= *from_frame).copied().collect(),
                centers: track.centers.iter().filter(|c| c.0 >= *from_frame).copied().collect(),
            };
            track.entries.retain(|e| e.0 < *from_frame);
            track.centers.retain(|c| c.0 < *from_frame);
            if !moved.is_empty() {
                pred.tracks.push(moved);
            }
            pred.tracks.retain(|t| !t.is_empty());
            pred.tracks.sort_by_key(|t| t.track_id);
            Ok(())
        }
        PerturbOp::DropDetections {
            sequence_id,
            detections,
        } => {
            if *sequence_id != pred.sequence_id {
                return Ok(());
            }
            for &(frame, seg) in detections {
                if let Some(segs) = pred.frames.get_mut(frame as usize) {
                    segs.retain(|s| s.segment_id != seg);
                }
                for t in &mut pred.tracks {
                    if t.entries.contains(&(frame, seg)) {
                        t.entries.retain(|e| *e != (frame, seg));
                        t.centers.retain(|c| c.0 != frame);
                    }
                }
            }
            pred.tracks.retain(|t| !t.is_empty());
            Ok(())
        }
        other => Err(Error::UnknownOp(format!("{} does not apply to predictions", other.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_scores_separate() {
        let cfg = SynthConfig::default();
        let f = render_frame(&cfg, 0, 3).unwrap();
        for (i, &s) in f.score.values().iter().enumerate() {
            if f.truth.instance()[i] > 0 {
                assert_eq!(s, ON_OBJECT_SCORE as f32);
            } else {
                assert_eq!(s, 0.0);
            }
        }
        assert_eq!(f.truth.objects().len(), 3);
        assert!(f.dropped.is_empty());
    }

    #[test]
    fn frames_are_deterministic() {
        let cfg = SynthConfig {
            score_noise_sigma: 0.2,
            fp_blob_rate: 1.5,
            drop_detection_prob: 0.3,
            ..SynthConfig::default()
        };
        assert_eq!(render_frame(&cfg, 0, 5).unwrap(), render_frame(&cfg, 0, 5).unwrap());
        assert_ne!(render_frame(&cfg, 0, 5).unwrap().score, render_frame(&cfg, 1, 5).unwrap().score);
    }

    #[test]
    fn full_drop_leaves_background() {
        let cfg = SynthConfig {
            drop_detection_prob: 1.0,
            ..SynthConfig::default()
        };
        let f = render_frame(&cfg, 0, 0).unwrap();
        assert!(f.score.values().iter().all(|&v| v == 0.0));
        assert_eq!(f.dropped, vec![1, 2, 3]);
    }

    #[test]
    fn depth_by_row() {
        let cfg = SynthConfig::default();
        assert_eq!(cfg.depth_at_row(0), 20.5);
        assert!((cfg.depth_at_row(cfg.height) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objects_enter_and_exit() {
        let mut o = SynthConfig::default().objects[0].clone();
        o.entry_frame = 2;
        o.exit_frame = Some(4);
        assert!(o.pixels_at(1, 96, 128).is_empty());
        assert!(!o.pixels_at(2, 96, 128).is_empty());
        assert!(o.pixels_at(4, 96, 128).is_empty());
        assert_eq!(o.center_at(2), o.initial_center);
    }

    #[test]
    fn perturb_op_parsing() {
        let op = PerturbOp::from_json(r#"{"op":"jitterScores","sigma":0.0,"seed":1}"#).unwrap();
        assert_eq!(op, PerturbOp::JitterScores { sigma: 0.0, seed: 1 });
        assert!(matches!(PerturbOp::from_json(r#"{"op":"explode"}"#), Err(Error::UnknownOp(_))));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = SynthConfig {
            labeled_every: 0,
            ..SynthConfig::default()
        };
        assert!(matches!(render_frame(&cfg, 0, 0), Err(Error::InvalidConfig(_))));
    }
}
