//! Retrieval of OOD objects: crop tracked segments, describe them, embed the
//! descriptors in 2D (PCA, then t-SNE) and cluster the embedding (DBSCAN).

pub mod dbscan;
pub mod descriptor;
pub mod pca;
pub mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, SegmentOrigin, Segment, SequencePrediction};

pub use dbscan::{dbscan_cluster, DbscanConfig};
pub use descriptor::{builtin_descriptor, DESCRIPTOR_DIM};
pub use pca::{pca_reduce, Pca};
pub use tsne::{tsne_embed, TsneConfig};

pub const DEFAULT_MIN_TRACK_LENGTH: usize = 10;
pub const DEFAULT_PCA_DIMS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RetrievalConfig {
    pub min_track_length: usize,
    pub pca_dims: usize,
    pub tsne: TsneConfig,
    pub dbscan: DbscanConfig,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            min_track_length: DEFAULT_MIN_TRACK_LENGTH,
            pca_dims: DEFAULT_PCA_DIMS,
            tsne: TsneConfig::default(),
            dbscan: DbscanConfig::default(),
        }
    }
}

/// Tight box around a segment's pixels.
pub fn crop_box(seg: &Segment) -> Result<BBox> {
    seg.pixels.bbox().ok_or(Error::EmptySegment)
}

/// Tracked segments whose track has at least `min_len` entries, in frame
/// then segment order. `min_len = 0` keeps every tracked segment.
pub fn filter_by_track_length(pred: &SequencePrediction, min_len: usize) -> Vec<SegmentOrigin> {
    let lookup = pred.track_lookup();
    let lengths: BTreeMap<u32, usize> = pred.tracks.iter().map(|t| (t.track_id, t.len())).collect();
    let mut out = Vec::new();
    for (t, segs) in pred.frames.iter().enumerate() {
        for s in segs {
            let Some(&track_id) = lookup.get(&(t as u32, s.segment_id)) else {
                continue;
            };
            if lengths[&track_id] >= min_len {
                out.push(SegmentOrigin {
                    sequence_id: pred.sequence_id.clone(),
                    frame_index: t as u32,
                    segment_id: s.segment_id,
                    track_id,
                });
            }
        }
    }
    out
}

/// PCA to `pca_dims` (or fewer if the data does not support more), then
/// t-SNE to 2D. The perplexity is lowered below a third of the point count
/// when necessary.
pub fn embed(vectors: &[Vec<f64>], cfg: &RetrievalConfig) -> Result<Vec<[f64; 2]>> {
    let reduced = pca_reduce(vectors, cfg.pca_dims)?;
    let mut tsne = cfg.tsne;
    let limit = (vectors.len() as f64 - 1.0) / 3.0;
    if tsne.perplexity > limit {
        tsne.perplexity = limit;
    }
    tsne_embed(&reduced.projected, &tsne)
}
