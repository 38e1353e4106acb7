//! Score thresholding and connected-component extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PixelSet, Run, ScoreMap, Segment};

/// OOD score threshold tuned for real street scenes.
pub const DEFAULT_TAU: f64 = 0.72;
/// OOD score threshold tuned for simulated street scenes.
pub const DEFAULT_TAU_SYNTHETIC: f64 = 0.81;
pub const DEFAULT_MIN_SIZE: usize = 1;

/// Row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: u32,
    width: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(height: u32, width: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height as usize * width as usize {
            return Err(Error::SizeMismatch(format!(
                "{height}x{width} mask with {} entries",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn full(height: u32, width: u32) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height as usize * width as usize],
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_pixel_set(&self) -> PixelSet {
        PixelSet::from_runs(self.runs())
    }

    /// Maximal horizontal runs of set pixels, in raster order.
    pub fn runs(&self) -> Vec<Run> {
        let w = self.width as usize;
        let mut runs = Vec::new();
        for (row, line) in self.bits.chunks_exact(w).enumerate() {
            let mut c = 0;
            while c < w {
                if line[c] {
                    let start = c;
                    while c < w && line[c] {
                        c += 1;
                    }
                    runs.push(Run {
                        row: row as u32,
                        start: start as u32,
                        len: (c - start) as u32,
                    });
                } else {
                    c += 1;
                }
            }
        }
        runs
    }
}

/// Marks pixels that lie in the ROI and score strictly above `tau`.
pub fn threshold_mask(score: &ScoreMap, roi: &Mask, tau: f64) -> Result<Mask> {
    if (roi.height, roi.width) != (score.height(), score.width()) {
        return Err(Error::SizeMismatch(format!(
            "score {}x{} vs roi {}x{}",
            score.height(),
            score.width(),
            roi.height,
            roi.width
        )));
    }
    let bits = score
        .values()
        .iter()
        .zip(&roi.bits)
        .map(|(&s, &inside)| inside && s as f64 > tau)
        .collect();
    Mask::new(score.height(), score.width(), bits)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// 8-connected components of `mask` with at least `min_size` pixels.
///
/// Components come back in scan order of their first pixel. Runs on
/// neighbouring rows are joined whenever their column ranges touch, which
/// includes diagonal contact.
pub fn connected_components(mask: &Mask, min_size: usize) -> Vec<PixelSet> {
    let runs = mask.runs();
    let mut parent: Vec<usize> = (0..runs.len()).collect();
    // First run index of the previous row and of the current row.
    let mut prev_row_start = 0;
    let mut row_start = 0;
    for i in 0..runs.len() {
        if i == 0 || runs[i].row != runs[i - 1].row {
            prev_row_start = if i > 0 && runs[i - 1].row + 1 == runs[i].row {
                row_start
            } else {
                i
            };
            row_start = i;
        }
        let a = runs[i];
        for j in prev_row_start..row_start {
            let b = runs[j];
            if b.start <= a.start + a.len && a.start <= b.start + b.len {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                if ra != rb {
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut groups: Vec<Vec<Run>> = Vec::new();
    let mut slot = vec![usize::MAX; runs.len()];
    for i in 0..runs.len() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(runs[i]);
    }
    groups
        .into_iter()
        .map(PixelSet::from_runs)
        .filter(|s| s.len() >= min_size.max(1))
        .collect()
}

/// Thresholds, labels components, and wraps them as segments with ids
/// `1..=m` in scan order.
pub fn extract_segments(
    score: &ScoreMap,
    roi: &Mask,
    tau: f64,
    min_size: usize,
    frame_index: u32,
) -> Result<Vec<Segment>> {
    let mask = threshold_mask(score, roi, tau)?;
    connected_components(&mask, min_size)
        .into_iter()
        .enumerate()
        .map(|(i, px)| Segment::with_scores(i as u32 + 1, frame_index, px, score))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub mean_boundary: f64,
    pub mean_interior: f64,
}

fn mean_over(set: &PixelSet, score: &ScoreMap) -> Option<f64> {
    let n = set.len();
    (n > 0).then(|| {
        set.indices(score.width())
            .map(|i| score.values()[i] as f64)
            .sum::<f64>()
            / n as f64
    })
}

/// Score statistics over the whole segment and over its boundary and
/// interior parts; an empty part falls back to the whole-segment mean.
pub fn segment_score_stats(seg: &Segment, score: &ScoreMap) -> Result<ScoreStats> {
    seg.pixels.check_bounds(score.height(), score.width())?;
    let mean = mean_over(&seg.pixels, score).ok_or(Error::EmptySegment)?;
    let variance = seg
        .pixels
        .indices(score.width())
        .map(|i| {
            let d = score.values()[i] as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / seg.size as f64;
    let interior = seg.pixels.interior();
    let boundary = seg.pixels.difference(&interior);
    Ok(ScoreStats {
        mean,
        variance,
        mean_boundary: mean_over(&boundary, score).unwrap_or(mean),
        mean_interior: mean_over(&interior, score).unwrap_or(mean),
    })
}
