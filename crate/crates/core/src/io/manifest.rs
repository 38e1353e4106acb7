//! Dataset manifest (JSON).
//!
//! Paths inside a manifest are relative to the directory holding the
//! manifest file unless absolute.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::masks::{read_masks, read_rgb_png, read_roi_png};
use crate::io::raster::read_score_map;
use crate::model::{FrameTruth, RgbImage, ScoreMap};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrameEntry {
    pub frame_index: u32,
    pub score_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    pub labeled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SequenceEntry {
    pub sequence_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub frames: Vec<FrameEntry>,
}

impl SequenceEntry {
    /// Number of frames spanned, `max(frameIndex) + 1`.
    pub fn frame_count(&self) -> u32 {
        self.frames.last().map_or(0, |f| f.frame_index + 1)
    }

    pub fn labeled_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.frame_count() as usize];
        for f in &self.frames {
            flags[f.frame_index as usize] = f.labeled;
        }
        flags
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub sequences: Vec<SequenceEntry>,
}

impl DatasetManifest {
    pub fn new(sequences: Vec<SequenceEntry>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            sequences,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for seq in &self.sequences {
            if !ids.insert(&seq.sequence_id) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate sequence id {:?}",
                    seq.sequence_id
                )));
            }
            if seq.frames.windows(2).any(|w| w[0].frame_index >= w[1].frame_index) {
                return Err(Error::InvalidManifest(format!(
                    "{}: frame indices not strictly increasing",
                    seq.sequence_id
                )));
            }
            for f in &seq.frames {
                if f.labeled && (f.semantic_path.is_none() || f.instance_path.is_none()) {
                    return Err(Error::InvalidManifest(format!(
                        "{} frame {}: labeled without semantic/instance paths",
                        seq.sequence_id, f.frame_index
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn sequence(&self, id: &str) -> Option<&SequenceEntry> {
        self.sequences.iter().find(|s| s.sequence_id == id)
    }
}

/// A manifest together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub root: PathBuf,
}

impl Dataset {
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let path = manifest_path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest = DatasetManifest::from_json(&text)?;
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { manifest, root })
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn score_map(&self, frame: &FrameEntry) -> Result<ScoreMap> {
        read_score_map(self.resolve(&frame.score_path))
    }

    /// Ground truth for a labeled frame, `None` for unlabeled ones.
    pub fn truth(&self, frame: &FrameEntry) -> Result<Option<FrameTruth>> {
        if !frame.labeled {
            return Ok(None);
        }
        let (Some(sem), Some(inst)) = (&frame.semantic_path, &frame.instance_path) else {
            return Err(Error::MissingMetadata(format!(
                "frame {} is labeled but has no mask paths",
                frame.frame_index
            )));
        };
        let class = frame.class_path.as_ref().map(|p| self.resolve(p));
        let depth = frame.depth_path.as_ref().map(|p| self.resolve(p));
        read_masks(
            self.resolve(sem),
            self.resolve(inst),
            class.as_deref(),
            depth.as_deref(),
        )
        .map(Some)
    }

    pub fn roi(&self, frame: &FrameEntry) -> Result<Option<Vec<bool>>> {
        frame
            .roi_path
            .as_ref()
            .map(|p| read_roi_png(self.resolve(p)).map(|(_, _, roi)| roi))
            .transpose()
    }

    pub fn image(&self, frame: &FrameEntry) -> Result<Option<RgbImage>> {
        frame
            .image_path
            .as_ref()
            .map(|p| read_rgb_png(self.resolve(p)))
            .transpose()
    }
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest.to_json()?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(i: u32, labeled: bool) -> FrameEntry {
        FrameEntry {
            frame_index: i,
            score_path: format!("s{i}.oods"),
            semantic_path: labeled.then(|| format!("sem{i}.png")),
            instance_path: labeled.then(|| format!("inst{i}.png")),
            class_path: None,
            depth_path: None,
            roi_path: None,
            image_path: None,
            labeled,
        }
    }

    #[test]
    fn rejects_unordered_frames() {
        let m = DatasetManifest::new(vec![SequenceEntry {
            sequence_id: "a".into(),
            fps: None,
            frames: vec![frame(1, false), frame(1, false)],
        }]);
        assert!(matches!(m.validate(), Err(Error::InvalidManifest(_))));
    }

    #[test]
    fn rejects_labeled_without_masks() {
        let mut f = frame(0, true);
        f.instance_path = None;
        let m = DatasetManifest::new(vec![SequenceEntry {
            sequence_id: "a".into(),
            fps: Some(10.0),
            frames: vec![f],
        }]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn labeled_flags_cover_gaps() {
        let seq = SequenceEntry {
            sequence_id: "a".into(),
            fps: None,
            frames: vec![frame(0, true), frame(1, false), frame(3, true)],
        };
        assert_eq!(seq.labeled_flags(), vec![true, false, false, true]);
    }

    #[test]
    fn json_keys_in_fixed_order() {
        let m = DatasetManifest::new(vec![SequenceEntry {
            sequence_id: "a".into(),
            fps: None,
            frames: vec![frame(0, true)],
        }]);
        let json = m.to_json().unwrap();
        let pos = |k: &str| json.find(k).unwrap();
        assert!(pos("schemaVersion") < pos("sequences"));
        assert!(pos("frameIndex") < pos("scorePath"));
        assert!(pos("scorePath") < pos("semanticPath"));
        assert!(pos("instancePath") < pos("labeled"));
        assert_eq!(DatasetManifest::from_json(&json).unwrap(), m);
    }
}
