//! Metrics restricted to groups of GT objects (by class or by depth).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{check_aligned, pixel_metrics, segment_metrics, PixelEvalResult, SegmentEvalResult};
use crate::model::{FrameTruth, PixelSet, ScoreMap, Segment};

/// Depth bin edges in meters; bins are left-open, right-closed.
pub const DEPTH_BIN_EDGES: [f64; 8] = [0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 40.0, 65.0];

/// Zero-based bin index of a depth, or `None` outside `(0, 65]`.
pub fn depth_bin(depth: f64) -> Option<usize> {
    DEPTH_BIN_EDGES
        .windows(2)
        .position(|w| w[0] < depth && depth <= w[1])
}

fn depth_bin_label(i: usize) -> String {
    format!("({},{}]", DEPTH_BIN_EDGES[i], DEPTH_BIN_EDGES[i + 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GroupBy {
    Class,
    Depth,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class" => Ok(GroupBy::Class),
            "depth" | "depthBin" => Ok(GroupBy::Depth),
            _ => Err(Error::UnknownOp(s.to_string())),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Class => "class",
            GroupBy::Depth => "depth",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupReport {
    pub group: String,
    pub object_frames: u64,
    pub segment: SegmentEvalResult,
    /// Absent when the group has no negative ROI pixels left.
    pub pixel: Option<PixelEvalResult>,
}

/// Sort key plus display label of the group an object falls into.
type GroupKey = (u64, String);

fn object_groups(truth: &FrameTruth, by: GroupBy) -> Result<Vec<(Option<GroupKey>, PixelSet)>> {
    truth
        .objects()
        .into_iter()
        .map(|o| {
            let key = match by {
                GroupBy::Class => Some((o.class_id as u64, o.class_id.to_string())),
                GroupBy::Depth => {
                    let d = o.min_depth.ok_or_else(|| {
                        Error::MissingMetadata(format!("depth for instance {}", o.instance))
                    })?;
                    depth_bin(d).map(|b| (b as u64, depth_bin_label(b)))
                }
            };
            Ok((key, o.pixels))
        })
        .collect()
}

/// Recomputes the metrics once per group. Objects outside the group are
/// turned into VOID, so neither they nor predictions on them are counted.
/// Objects whose depth lies outside every bin belong to no group.
pub fn grouped_report(
    scores: &[ScoreMap],
    preds: &[Vec<Segment>],
    truths: &[FrameTruth],
    by: GroupBy,
    kappa_grid: &[f64],
) -> Result<Vec<GroupReport>> {
    check_aligned(scores.len(), truths.len(), "score maps")?;
    check_aligned(preds.len(), truths.len(), "prediction frames")?;
    let per_frame: Vec<Vec<(Option<GroupKey>, PixelSet)>> =
        truths.iter().map(|t| object_groups(t, by)).collect::<Result<_>>()?;
    let mut keys: BTreeMap<GroupKey, u64> = BTreeMap::new();
    for objs in &per_frame {
        for (k, _) in objs {
            if let Some(k) = k {
                *keys.entry(k.clone()).or_default() += 1;
            }
        }
    }

    let mut out = Vec::new();
    for (key, object_frames) in keys {
        let filtered: Vec<FrameTruth> = truths
            .iter()
            .zip(&per_frame)
            .map(|(t, objs)| {
                let outside = objs
                    .iter()
                    .filter(|(k, _)| k.as_ref() != Some(&key))
                    .fold(PixelSet::new(), |acc, (_, px)| acc.union(px));
                t.with_ignored(&outside)
            })
            .collect();
        let pixel = match pixel_metrics(scores, &filtered) {
            Ok(p) => Some(p),
            Err(Error::NoNegatives | Error::NoPositives) => None,
            Err(e) => return Err(e),
        };
        out.push(GroupReport {
            group: key.1,
            object_frames,
            segment: segment_metrics(preds, &filtered, kappa_grid)?,
            pixel,
        });
    }
    Ok(out)
}
