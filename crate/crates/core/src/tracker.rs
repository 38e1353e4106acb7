//! Overlap and center-distance tracking of OOD segments.
//!
//! Each frame after the first runs, in order:
//!
//! 1. aggregate segments of the frame whose centers lie close together,
//! 2. / 3. match against the previous frame, strongest overlap first and
//!    then nearest centers,
//! 4. match leftovers against tracks extrapolated by linear regression
//!    (flashing or briefly missed segments),
//! 5. open new tracks for whatever is still unmatched.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mask_iou, Center, PixelSet, SequencePrediction, Segment, Track};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackerConfig {
    /// Step 1: merge same-frame segments with centers closer than this (px).
    pub aggregation_dist: f64,
    /// Steps 2 and 4: maximal center distance for a match (px).
    pub center_dist: f64,
    /// Step 3: minimal mask IoU for an overlap match.
    pub min_iou: f64,
    /// Step 4: observations at most this many frames back feed the regression.
    pub regression_window: u32,
    /// Step 4: a track may skip at most this many frames before it closes.
    pub max_gap: u32,
}

impl TrackerConfig {
    pub const AGGREGATION_FRACTION: f64 = 0.01;
    pub const CENTER_FRACTION: f64 = 0.05;
    pub const MIN_IOU: f64 = 0.35;
    pub const REGRESSION_WINDOW: u32 = 5;
    pub const MAX_GAP: u32 = 2;

    /// Defaults scaled by the image diagonal.
    pub fn for_frame(height: u32, width: u32) -> Self {
        let diag = (height as f64).hypot(width as f64);
        Self {
            aggregation_dist: Self::AGGREGATION_FRACTION * diag,
            center_dist: Self::CENTER_FRACTION * diag,
            min_iou: Self::MIN_IOU,
            regression_window: Self::REGRESSION_WINDOW,
            max_gap: Self::MAX_GAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.aggregation_dist > 0.0
            && self.center_dist > 0.0
            && self.min_iou > 0.0
            && self.min_iou <= 1.0
            && self.regression_window >= 2
            && self.max_gap > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad tracker config {self:?}")))
        }
    }
}

fn merge_segments(group: &[&Segment]) -> Segment {
    if group.len() == 1 {
        return group[0].clone();
    }
    let pixels = group
        .iter()
        .fold(PixelSet::new(), |acc, s| acc.union(&s.pixels));
    let weight: f64 = group.iter().map(|s| s.size as f64).sum();
    let mean = group.iter().map(|s| s.mean_score * s.size as f64).sum::<f64>() / weight;
    let id = group.iter().map(|s| s.segment_id).min().unwrap();
    Segment::new(id, group[0].frame_index, pixels, mean).expect("merged segments are non-empty")
}

/// Step 1: merges segments whose centers are closer than `aggregation_dist`,
/// closing transitively. A merged segment keeps the smallest member id.
/// Output is ordered by segment id.
pub fn step1_aggregate(segs: &[Segment], aggregation_dist: f64) -> Vec<Segment> {
    let n = segs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if segs[i].center.distance(&segs[j].center) < aggregation_dist {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&Segment>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(&segs[i]);
    }
    let mut out: Vec<Segment> = groups.values().map(|g| merge_segments(g)).collect();
    out.sort_by_key(|s| s.segment_id);
    out
}

/// Steps 2 and 3: greedy one-to-one matching of current segments to the
/// tracked segments of the previous frame.
///
/// Pairs with IoU ≥ `min_iou` are taken first by descending IoU; remaining
/// pairs within `center_dist` follow by ascending distance. Ties go to the
/// lower previous index, then the lower current index. Returns
/// `(current index, track id)` in matching order.
pub fn step23_match(prev: &[(u32, &Segment)], curr: &[Segment], cfg: &TrackerConfig) -> Vec<(usize, u32)> {
    let mut used_prev = vec![false; prev.len()];
    let mut used_curr = vec![false; curr.len()];
    let mut out = Vec::new();

    let mut overlap: Vec<(f64, usize, usize)> = Vec::new();
    let mut near: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, (_, ps)) in prev.iter().enumerate() {
        for (ci, cs) in curr.iter().enumerate() {
            let iou = if ps.bbox_overlaps(cs) { mask_iou(&ps.pixels, &cs.pixels) } else { 0.0 };
            if iou >= cfg.min_iou {
                overlap.push((iou, pi, ci));
            }
            let d = ps.center.distance(&cs.center);
            if d <= cfg.center_dist {
                near.push((d, pi, ci));
            }
        }
    }
    overlap.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, pi, ci) in overlap.into_iter().chain(near) {
        if !used_prev[pi] && !used_curr[ci] {
            used_prev[pi] = true;
            used_curr[ci] = true;
            out.push((ci, prev[pi].0));
        }
    }
    out
}

/// Step 4: least-squares extrapolation of a track's center to `target_frame`.
///
/// Uses observations no more than `regression_window` frames before the
/// target. Returns `None` with fewer than two such observations, or when
/// the track has been missing for more than `max_gap` frames.
pub fn step4_regress(track: &Track, target_frame: u32, regression_window: u32, max_gap: u32) -> Option<Center> {
    let last = track.centers.last()?.0;
    if last >= target_frame || target_frame - last - 1 > max_gap {
        return None;
    }
    let obs: Vec<&(u32, Center)> = track
        .centers
        .iter()
        .filter(|(f, _)| *f < target_frame && target_frame - f <= regression_window)
        .collect();
    if obs.len() < 2 {
        return None;
    }
    let n = obs.len() as f64;
    let fm = obs.iter().map(|(f, _)| *f as f64).sum::<f64>() / n;
    let vm = obs.iter().map(|(_, c)| c.v).sum::<f64>() / n;
    let hm = obs.iter().map(|(_, c)| c.h).sum::<f64>() / n;
    let sxx: f64 = obs.iter().map(|(f, _)| (*f as f64 - fm).powi(2)).sum();
    let sxv: f64 = obs.iter().map(|(f, c)| (*f as f64 - fm) * (c.v - vm)).sum();
    let sxh: f64 = obs.iter().map(|(f, c)| (*f as f64 - fm) * (c.h - hm)).sum();
    let dt = target_frame as f64 - fm;
    Some(Center::new(vm + sxv / sxx * dt, hm + sxh / sxx * dt))
}

impl Segment {
    fn bbox_overlaps(&self, other: &Segment) -> bool {
        self.bbox.v_min <= other.bbox.v_max
            && other.bbox.v_min <= self.bbox.v_max
            && self.bbox.h_min <= other.bbox.h_max
            && other.bbox.h_min <= self.bbox.h_max
    }
}

/// Runs steps 1 to 5 over a whole sequence.
///
/// Frame 0 segments get a seeded random permutation of `1..=m` as ids; later
/// new tracks take the next unused id.
pub fn track_sequence(
    sequence_id: &str,
    frames: Vec<Vec<Segment>>,
    cfg: &TrackerConfig,
    seed: u64,
) -> SequencePrediction {
    let mut tracks: Vec<Track> = Vec::new();
    let mut out_frames: Vec<Vec<Segment>> = Vec::with_capacity(frames.len());
    // track id -> index in `tracks`
    let mut index: BTreeMap<u32, usize> = BTreeMap::new();
    let mut next_id = 1u32;
    let mut prev_assigned: Vec<(u32, usize)> = Vec::new(); // (track, segment index in previous frame)

    for (t, segs) in frames.into_iter().enumerate() {
        let t = t as u32;
        let segs = step1_aggregate(&segs, cfg.aggregation_dist);
        let mut assigned: Vec<Option<u32>> = vec![None; segs.len()];

        if t == 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<(u64, usize)> = (0..segs.len()).map(|i| (rng.random::<u64>(), i)).collect();
            order.sort_unstable();
            for (rank, (_, i)) in order.into_iter().enumerate() {
                assigned[i] = Some(rank as u32 + 1);
            }
            next_id = segs.len() as u32 + 1;
        } else {
            let prev_frame: &Vec<Segment> = out_frames.last().expect("previous frame exists");
            let prev: Vec<(u32, &Segment)> =
                prev_assigned.iter().map(|&(id, si)| (id, &prev_frame[si])).collect();
            for (ci, id) in step23_match(&prev, &segs, cfg) {
                assigned[ci] = Some(id);
            }

            let taken: HashSet<u32> = assigned.iter().flatten().copied().collect();
            let mut candidates: Vec<(f64, u32, usize)> = Vec::new();
            for tr in &tracks {
                if taken.contains(&tr.track_id) {
                    continue;
                }
                let Some(pred) = step4_regress(tr, t, cfg.regression_window, cfg.max_gap) else {
                    continue;
                };
                for (ci, s) in segs.iter().enumerate() {
                    if assigned[ci].is_none() {
                        let d = pred.distance(&s.center);
                        if d <= cfg.center_dist {
                            candidates.push((d, tr.track_id, ci));
                        }
                    }
                }
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used_tracks: HashSet<u32> = HashSet::new();
            for (_, id, ci) in candidates {
                if assigned[ci].is_none() && used_tracks.insert(id) {
                    assigned[ci] = Some(id);
                }
            }

            for a in assigned.iter_mut().filter(|a| a.is_none()) {
                *a = Some(next_id);
                next_id += 1;
            }
        }

        prev_assigned.clear();
        for (si, (seg, id)) in segs.iter().zip(&assigned).enumerate() {
            let id = id.expect("every segment assigned");
            let slot = *index.entry(id).or_insert_with(|| {
                tracks.push(Track {
                    track_id: id,
                    entries: Vec::new(),
                    centers: Vec::new(),
                });
                tracks.len() - 1
            });
            tracks[slot].entries.push((t, seg.segment_id));
            tracks[slot].centers.push((t, seg.center));
            prev_assigned.push((id, si));
        }
        out_frames.push(segs);
    }

    tracks.sort_by_key(|t| t.track_id);
    SequencePrediction {
        sequence_id: sequence_id.to_string(),
        frame_count: out_frames.len() as u32,
        frames: out_frames,
        tracks,
    }
}
