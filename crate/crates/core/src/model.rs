//! Domain types shared by every stage of the pipeline.
//!
//! Pixel coordinates are `(row, col)` with the origin at the top-left corner.
//! Everything here is plain data: no I/O and no algorithms beyond the set
//! arithmetic the types need to stay consistent.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pixel position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub row: u32,
    pub col: u32,
}

impl Pixel {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }
}

/// A horizontal run of pixels `[start, start + len)` on one row.
/// Serialized as `[row, start, len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 3]", into = "[u32; 3]")]
pub struct Run {
    pub row: u32,
    pub start: u32,
    pub len: u32,
}

impl From<[u32; 3]> for Run {
    fn from([row, start, len]: [u32; 3]) -> Self {
        Run { row, start, len }
    }
}

impl From<Run> for [u32; 3] {
    fn from(r: Run) -> Self {
        [r.row, r.start, r.len]
    }
}

impl Run {
    fn end(&self) -> u32 {
        self.start + self.len
    }
}

/// Run-length encoded pixel set.
///
/// Runs are kept canonical: sorted by `(row, start)`, non-empty, and never
/// overlapping or touching on the same row. Two sets are equal exactly when
/// their run lists are equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Run>", into = "Vec<Run>")]
pub struct PixelSet {
    runs: Vec<Run>,
}

impl TryFrom<Vec<Run>> for PixelSet {
    type Error = Error;

    fn try_from(runs: Vec<Run>) -> Result<Self> {
        if runs.iter().any(|r| r.len == 0 || r.start.checked_add(r.len).is_none()) {
            return Err(Error::DimMismatch("run with zero length or overflow".into()));
        }
        Ok(Self::from_runs(runs))
    }
}

impl From<PixelSet> for Vec<Run> {
    fn from(set: PixelSet) -> Self {
        set.runs
    }
}

impl FromIterator<Pixel> for PixelSet {
    fn from_iter<I: IntoIterator<Item = Pixel>>(iter: I) -> Self {
        let mut pixels: Vec<Pixel> = iter.into_iter().collect();
        pixels.sort_unstable();
        pixels.dedup();
        let mut runs: Vec<Run> = Vec::new();
        for p in pixels {
            match runs.last_mut() {
                Some(last) if last.row == p.row && last.end() == p.col => last.len += 1,
                _ => runs.push(Run {
                    row: p.row,
                    start: p.col,
                    len: 1,
                }),
            }
        }
        Self { runs }
    }
}

impl PixelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a canonical set from arbitrary (possibly overlapping) runs.
    /// Zero-length runs are dropped.
    pub fn from_runs(mut runs: Vec<Run>) -> Self {
        runs.retain(|r| r.len > 0);
        runs.sort_unstable();
        let mut out: Vec<Run> = Vec::with_capacity(runs.len());
        for r in runs {
            match out.last_mut() {
                Some(last) if last.row == r.row && r.start <= last.end() => {
                    let end = last.end().max(r.end());
                    last.len = end - last.start;
                }
                _ => out.push(r),
            }
        }
        Self { runs: out }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.len as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.start..r.end()).map(move |c| Pixel::new(r.row, c)))
    }

    pub fn contains(&self, p: Pixel) -> bool {
        let idx = self
            .runs
            .partition_point(|r| (r.row, r.start) <= (p.row, p.col));
        idx > 0 && {
            let r = self.runs[idx - 1];
            r.row == p.row && p.col < r.end()
        }
    }

    /// Tight bounding box, or `None` for the empty set.
    pub fn bbox(&self) -> Option<BBox> {
        let first = self.runs.first()?;
        let last = self.runs.last()?;
        let h_min = self.runs.iter().map(|r| r.start).min()?;
        let h_max = self.runs.iter().map(|r| r.end() - 1).max()?;
        Some(BBox {
            v_min: first.row,
            v_max: last.row,
            h_min,
            h_max,
        })
    }

    pub fn union(&self, other: &PixelSet) -> PixelSet {
        combine(self, other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &PixelSet) -> PixelSet {
        combine(self, other, |a, b| a && b)
    }

    pub fn difference(&self, other: &PixelSet) -> PixelSet {
        combine(self, other, |a, b| a && !b)
    }

    pub fn intersection_len(&self, other: &PixelSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0usize);
        let (a, b) = (&self.runs, &other.runs);
        while i < a.len() && j < b.len() {
            let (ra, rb) = (a[i], b[j]);
            match ra.row.cmp(&rb.row) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    let lo = ra.start.max(rb.start);
                    let hi = ra.end().min(rb.end());
                    if hi > lo {
                        n += (hi - lo) as usize;
                    }
                    if ra.end() <= rb.end() {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
            }
        }
        n
    }

    pub fn intersects(&self, other: &PixelSet) -> bool {
        self.intersection_len(other) > 0
    }

    /// Shifts every pixel by `(dv, dh)`, dropping pixels that land on
    /// negative coordinates.
    pub fn translate(&self, dv: i64, dh: i64) -> PixelSet {
        let runs = self
            .runs
            .iter()
            .filter_map(|r| {
                let row = r.row as i64 + dv;
                let start = r.start as i64 + dh;
                let end = r.end() as i64 + dh;
                if row < 0 || end <= 0 || row > u32::MAX as i64 || end > u32::MAX as i64 {
                    return None;
                }
                let start = start.max(0);
                Some(Run {
                    row: row as u32,
                    start: start as u32,
                    len: (end - start) as u32,
                })
            })
            .collect();
        PixelSet::from_runs(runs)
    }

    /// Pixels whose full 8-neighbourhood lies inside the set.
    pub fn interior(&self) -> PixelSet {
        let eroded = PixelSet::from_runs(
            self.runs
                .iter()
                .filter(|r| r.len >= 3)
                .map(|r| Run {
                    row: r.row,
                    start: r.start + 1,
                    len: r.len - 2,
                })
                .collect(),
        );
        eroded
            .intersection(&eroded.translate(1, 0))
            .intersection(&eroded.translate(-1, 0))
    }

    /// Sum of row and column coordinates, as `(Σrow, Σcol)`.
    fn coordinate_sums(&self) -> (f64, f64) {
        let mut sv = 0.0;
        let mut sh = 0.0;
        for r in &self.runs {
            let n = r.len as f64;
            sv += r.row as f64 * n;
            // start + (start+1) + ... + (end-1)
            sh += n * (r.start as f64 + (n - 1.0) / 2.0);
        }
        (sv, sh)
    }

    /// Checks that every pixel lies inside a `height x width` frame.
    pub fn check_bounds(&self, height: u32, width: u32) -> Result<()> {
        for r in &self.runs {
            if r.row >= height || r.end() > width {
                return Err(Error::OutOfBounds {
                    row: r.row,
                    col: r.end() - 1,
                    height,
                    width,
                });
            }
        }
        Ok(())
    }

    /// Iterates flat row-major indices for a frame of the given width.
    pub fn indices(&self, width: u32) -> impl Iterator<Item = usize> + '_ {
        let w = width as usize;
        self.runs.iter().flat_map(move |r| {
            let base = r.row as usize * w;
            (base + r.start as usize)..(base + r.end() as usize)
        })
    }
}

/// Row-wise boolean combination of two canonical run sets.
fn combine(a: &PixelSet, b: &PixelSet, op: impl Fn(bool, bool) -> bool) -> PixelSet {
    let mut out = Vec::new();
    let (ra, rb) = (&a.runs, &b.runs);
    let (mut i, mut j) = (0, 0);
    let mut bounds: Vec<u32> = Vec::new();
    while i < ra.len() || j < rb.len() {
        let row = match (ra.get(i), rb.get(j)) {
            (Some(x), Some(y)) => x.row.min(y.row),
            (Some(x), None) => x.row,
            (None, Some(y)) => y.row,
            (None, None) => unreachable!(),
        };
        let i_end = i + ra[i..].iter().take_while(|r| r.row == row).count();
        let j_end = j + rb[j..].iter().take_while(|r| r.row == row).count();
        let row_a = &ra[i..i_end];
        let row_b = &rb[j..j_end];
        bounds.clear();
        for r in row_a.iter().chain(row_b) {
            bounds.push(r.start);
            bounds.push(r.end());
        }
        bounds.sort_unstable();
        bounds.dedup();
        let inside = |runs: &[Run], c: u32| runs.iter().any(|r| r.start <= c && c < r.end());
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if op(inside(row_a, lo), inside(row_b, lo)) {
                match out.last_mut() {
                    Some(Run { row: r, start, len }) if *r == row && *start + *len == lo => {
                        *len += hi - lo
                    }
                    _ => out.push(Run {
                        row,
                        start: lo,
                        len: hi - lo,
                    }),
                }
            }
        }
        i = i_end;
        j = j_end;
    }
    PixelSet { runs: out }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub v_min: u32,
    pub v_max: u32,
    pub h_min: u32,
    pub h_max: u32,
}

impl BBox {
    pub fn height(&self) -> u32 {
        self.v_max - self.v_min + 1
    }

    pub fn width(&self) -> u32 {
        self.h_max - self.h_min + 1
    }
}

/// Real-valued pixel position `(v, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub v: f64,
    pub h: f64,
}

impl Center {
    pub fn new(v: f64, h: f64) -> Self {
        Self { v, h }
    }

    pub fn distance(&self, other: &Center) -> f64 {
        (self.v - other.v).hypot(self.h - other.h)
    }
}

/// Mean of the pixel coordinates.
pub fn geometric_center(pixels: &PixelSet) -> Result<Center> {
    if pixels.is_empty() {
        return Err(Error::EmptySegment);
    }
    let n = pixels.len() as f64;
    let (sv, sh) = pixels.coordinate_sums();
    Ok(Center::new(sv / n, sh / n))
}

/// Per-pixel OOD score for one frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    height: u32,
    width: u32,
    values: Vec<f32>,
}

impl ScoreMap {
    pub fn new(height: u32, width: u32, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::DimMismatch(format!(
                "score map must be at least 1x1, got {height}x{width}"
            )));
        }
        if values.len() != height as usize * width as usize {
            return Err(Error::DimMismatch(format!(
                "{}x{} map needs {} values, got {}",
                height,
                width,
                height as usize * width as usize,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: u32, width: u32, value: f32) -> Result<Self> {
        Self::new(height, width, vec![value; height as usize * width as usize])
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: u32, col: u32) -> f32 {
        self.values[row as usize * self.width as usize + col as usize]
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }
}

/// Ground-truth semantic label of one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Void = 0,
    NotOod = 1,
    Ood = 2,
}

impl Label {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Void),
            1 => Some(Label::NotOod),
            2 => Some(Label::Ood),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// One ground-truth OOD object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub instance: u16,
    pub class_id: u16,
    pub pixels: PixelSet,
    pub center: Center,
    /// Minimum depth over the object's pixels, when depth is available.
    pub min_depth: Option<f64>,
}

/// Per-pixel ground truth for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    height: u32,
    width: u32,
    semantic: Vec<Label>,
    instance: Vec<u16>,
    class_id: Vec<u16>,
    depth: Option<Vec<f32>>,
}

impl FrameTruth {
    pub fn new(
        height: u32,
        width: u32,
        semantic: Vec<Label>,
        instance: Vec<u16>,
        class_id: Vec<u16>,
        depth: Option<Vec<f32>>,
    ) -> Result<Self> {
        let n = height as usize * width as usize;
        if height == 0 || width == 0 {
            return Err(Error::SizeMismatch("frame must be at least 1x1".into()));
        }
        if semantic.len() != n || instance.len() != n || class_id.len() != n {
            return Err(Error::SizeMismatch(format!(
                "{height}x{width} frame: semantic {}, instance {}, class {}",
                semantic.len(),
                instance.len(),
                class_id.len()
            )));
        }
        if let Some(d) = &depth {
            if d.len() != n {
                return Err(Error::SizeMismatch(format!(
                    "{height}x{width} frame: depth has {} values",
                    d.len()
                )));
            }
        }
        for i in 0..n {
            let ood = semantic[i] == Label::Ood;
            if (instance[i] > 0) != ood {
                return Err(Error::IllegalLabel(format!(
                    "pixel {i}: instance {} with semantic {:?}",
                    instance[i], semantic[i]
                )));
            }
            if (class_id[i] > 0) != ood {
                return Err(Error::IllegalLabel(format!(
                    "pixel {i}: class {} with semantic {:?}",
                    class_id[i], semantic[i]
                )));
            }
        }
        Ok(Self {
            height,
            width,
            semantic,
            instance,
            class_id,
            depth,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn semantic(&self) -> &[Label] {
        &self.semantic
    }

    pub fn instance(&self) -> &[u16] {
        &self.instance
    }

    pub fn class_id(&self) -> &[u16] {
        &self.class_id
    }

    pub fn depth(&self) -> Option<&[f32]> {
        self.depth.as_deref()
    }

    pub fn label_at(&self, p: Pixel) -> Label {
        self.semantic[p.row as usize * self.width as usize + p.col as usize]
    }

    /// Region of interest: every pixel that is not VOID.
    pub fn roi(&self) -> Vec<bool> {
        self.semantic.iter().map(|&l| l != Label::Void).collect()
    }

    fn set_where(&self, pred: impl Fn(usize) -> bool) -> PixelSet {
        let w = self.width as usize;
        (0..self.semantic.len())
            .filter(|&i| pred(i))
            .map(|i| Pixel::new((i / w) as u32, (i % w) as u32))
            .collect()
    }

    pub fn ood_pixels(&self) -> PixelSet {
        self.set_where(|i| self.semantic[i] == Label::Ood)
    }

    pub fn void_pixels(&self) -> PixelSet {
        self.set_where(|i| self.semantic[i] == Label::Void)
    }

    /// Ground-truth objects keyed by instance id, in ascending id order.
    pub fn objects(&self) -> Vec<GtObject> {
        let w = self.width as usize;
        let mut by_instance: BTreeMap<u16, (u16, Vec<Pixel>, f64)> = BTreeMap::new();
        for (i, &inst) in self.instance.iter().enumerate() {
            if inst == 0 {
                continue;
            }
            let entry = by_instance
                .entry(inst)
                .or_insert((self.class_id[i], Vec::new(), f64::INFINITY));
            entry.1.push(Pixel::new((i / w) as u32, (i % w) as u32));
            if let Some(d) = &self.depth {
                entry.2 = entry.2.min(d[i] as f64);
            }
        }
        by_instance
            .into_iter()
            .map(|(instance, (class_id, pixels, depth))| {
                let pixels: PixelSet = pixels.into_iter().collect();
                let center = geometric_center(&pixels).expect("object has pixels");
                GtObject {
                    instance,
                    class_id,
                    pixels,
                    center,
                    min_depth: self.depth.as_ref().map(|_| depth),
                }
            })
            .collect()
    }

    /// Copy in which the given OOD pixels become VOID (ignored by every metric).
    pub fn with_ignored(&self, ignored: &PixelSet) -> FrameTruth {
        let mut out = self.clone();
        for idx in ignored.indices(self.width) {
            if out.semantic[idx] == Label::Ood {
                out.semantic[idx] = Label::Void;
                out.instance[idx] = 0;
                out.class_id[idx] = 0;
            }
        }
        out
    }
}

/// One connected predicted OOD component in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Segment {
    pub segment_id: u32,
    pub frame_index: u32,
    pub size: usize,
    pub bbox: BBox,
    pub center: Center,
    pub mean_score: f64,
    pub interior_size: usize,
    pub pixels: PixelSet,
}

impl Segment {
    /// Builds a segment, deriving the geometry from the pixel set.
    pub fn new(segment_id: u32, frame_index: u32, pixels: PixelSet, mean_score: f64) -> Result<Self> {
        let center = geometric_center(&pixels)?;
        let bbox = pixels.bbox().ok_or(Error::EmptySegment)?;
        Ok(Self {
            segment_id,
            frame_index,
            size: pixels.len(),
            bbox,
            center,
            mean_score,
            interior_size: pixels.interior().len(),
            pixels,
        })
    }

    /// Builds a segment whose mean score is read from `score`.
    pub fn with_scores(
        segment_id: u32,
        frame_index: u32,
        pixels: PixelSet,
        score: &ScoreMap,
    ) -> Result<Self> {
        pixels.check_bounds(score.height(), score.width())?;
        let n = pixels.len();
        let sum: f64 = pixels
            .indices(score.width())
            .map(|i| score.values()[i] as f64)
            .sum();
        Self::new(segment_id, frame_index, pixels, if n > 0 { sum / n as f64 } else { 0.0 })
    }

    pub fn boundary_size(&self) -> usize {
        self.size - self.interior_size
    }

    pub fn iou(&self, other: &Segment) -> f64 {
        mask_iou(&self.pixels, &other.pixels)
    }
}

/// Intersection over union of two pixel sets (0 when both are empty).
pub fn mask_iou(a: &PixelSet, b: &PixelSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Persistent identity of one predicted object across a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Track {
    pub track_id: u32,
    /// `(frameIndex, segmentId)` in strictly increasing frame order.
    pub entries: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centers: Vec<(u32, Center)>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }
}

/// Segments and tracks predicted for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SequencePrediction {
    pub sequence_id: String,
    pub frame_count: u32,
    pub frames: Vec<Vec<Segment>>,
    pub tracks: Vec<Track>,
}

impl SequencePrediction {
    /// Checks the cross-references between tracks and frames.
    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.frame_count as usize {
            return Err(Error::InvalidManifest(format!(
                "{}: {} frames for frameCount {}",
                self.sequence_id,
                self.frames.len(),
                self.frame_count
            )));
        }
        let mut owner: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.tracks {
            if t.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidManifest(format!(
                    "track {} frames not strictly increasing",
                    t.track_id
                )));
            }
            for &(f, s) in &t.entries {
                let exists = self
                    .frames
                    .get(f as usize)
                    .is_some_and(|segs| segs.iter().any(|seg| seg.segment_id == s));
                if !exists {
                    return Err(Error::InvalidManifest(format!(
                        "track {} references missing segment {s} in frame {f}",
                        t.track_id
                    )));
                }
                if let Some(prev) = owner.insert((f, s), t.track_id) {
                    return Err(Error::InvalidManifest(format!(
                        "segment {s} in frame {f} owned by tracks {prev} and {}",
                        t.track_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Map `(frameIndex, segmentId) -> trackId`.
    pub fn track_lookup(&self) -> BTreeMap<(u32, u32), u32> {
        self.tracks
            .iter()
            .flat_map(|t| t.entries.iter().map(move |&e| (e, t.track_id)))
            .collect()
    }

    pub fn track_len(&self, track_id: u32) -> usize {
        self.tracks
            .iter()
            .find(|t| t.track_id == track_id)
            .map_or(0, Track::len)
    }
}

/// Provenance of one embedded segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SegmentOrigin {
    pub sequence_id: String,
    pub frame_index: u32,
    pub segment_id: u32,
    pub track_id: u32,
}

/// A segment's 2-D representative together with its ground-truth identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmbeddingPoint {
    pub coords: [f64; 2],
    pub origin: SegmentOrigin,
    pub gt_class: Option<u16>,
    pub gt_instance: Option<u16>,
}

/// Cluster label of one point; `None` is DBSCAN noise.
pub type ClusterLabel = Option<u32>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub points: Vec<EmbeddingPoint>,
    pub labels: Vec<ClusterLabel>,
}

impl ClusterAssignment {
    pub fn new(points: Vec<EmbeddingPoint>, labels: Vec<ClusterLabel>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::SizeMismatch(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        Ok(Self { points, labels })
    }

    /// Distinct non-noise cluster ids in ascending order.
    pub fn clusters(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.labels.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters().len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

/// 8-bit RGB frame image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: u32,
    width: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(height: u32, width: u32, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height as usize * width as usize * 3 {
            return Err(Error::DimMismatch(format!(
                "{height}x{width} RGB image with {} bytes",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: u32, width: u32, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(height as usize * width as usize * 3)
            .collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: u32, col: u32) -> [u8; 3] {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copies the inclusive box out of the image.
    pub fn crop(&self, bbox: &BBox) -> Result<RgbImage> {
        if bbox.v_max >= self.height || bbox.h_max >= self.width {
            return Err(Error::OutOfBounds {
                row: bbox.v_max,
                col: bbox.h_max,
                height: self.height,
                width: self.width,
            });
        }
        let mut data = Vec::with_capacity(bbox.height() as usize * bbox.width() as usize * 3);
        for r in bbox.v_min..=bbox.v_max {
            let start = (r as usize * self.width as usize + bbox.h_min as usize) * 3;
            data.extend_from_slice(&self.data[start..start + bbox.width() as usize * 3]);
        }
        RgbImage::new(bbox.height(), bbox.width(), data)
    }
}
