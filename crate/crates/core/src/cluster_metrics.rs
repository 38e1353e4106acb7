//! Cluster quality scores: instance cohesion, class impurity and class
//! fragmentation. Noise points never count.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, FrameTruth, Segment};

/// Class and instance of the GT object overlapping the segment most, with
/// ties going to the smaller instance id. `None` without any overlap.
pub fn assign_gt(seg: &Segment, truth: &FrameTruth) -> Result<Option<(u16, u16)>> {
    seg.pixels.check_bounds(truth.height(), truth.width()).map_err(|_| {
        Error::SizeMismatch(format!(
            "segment {} exceeds {}x{} truth",
            seg.segment_id,
            truth.height(),
            truth.width()
        ))
    })?;
    let mut overlap: BTreeMap<u16, (usize, u16)> = BTreeMap::new();
    for i in seg.pixels.indices(truth.width()) {
        let inst = truth.instance()[i];
        if inst > 0 {
            overlap.entry(inst).or_insert((0, truth.class_id()[i])).0 += 1;
        }
    }
    let mut best: Option<(usize, u16, u16)> = None;
    for (inst, (count, class)) in overlap {
        if best.is_none_or(|b| count > b.0) {
            best = Some((count, inst, class));
        }
    }
    Ok(best.map(|(_, inst, class)| (class, inst)))
}

/// Clustered points as `(cluster, point index)`.
fn clustered(a: &ClusterAssignment) -> impl Iterator<Item = (u32, usize)> + '_ {
    a.labels.iter().enumerate().filter_map(|(i, l)| l.map(|c| (c, i)))
}

/// Mean over GT instances of the largest share of the instance held by a
/// single cluster. Instances are keyed by sequence and instance id.
pub fn cs_inst(a: &ClusterAssignment) -> Result<f64> {
    let mut per_instance: BTreeMap<(&str, u16), BTreeMap<u32, usize>> = BTreeMap::new();
    for (c, i) in clustered(a) {
        let p = &a.points[i];
        if let Some(inst) = p.gt_instance {
            *per_instance
                .entry((p.origin.sequence_id.as_str(), inst))
                .or_default()
                .entry(c)
                .or_default() += 1;
        }
    }
    if per_instance.is_empty() {
        return Err(Error::NoInstances);
    }
    let sum: f64 = per_instance
        .values()
        .map(|counts| {
            let total: usize = counts.values().sum();
            *counts.values().max().unwrap() as f64 / total as f64
        })
        .sum();
    Ok(sum / per_instance.len() as f64)
}

/// Mean number of distinct GT classes per cluster.
///
/// Points without a GT object count as one extra pseudo-class when
/// `count_false_positive_class` is set; otherwise clusters holding only such
/// points are left out of the mean.
pub fn cs_imp(a: &ClusterAssignment, count_false_positive_class: bool) -> Result<f64> {
    let mut classes: BTreeMap<u32, BTreeSet<Option<u16>>> = BTreeMap::new();
    for (c, i) in clustered(a) {
        let entry = classes.entry(c).or_default();
        match a.points[i].gt_class {
            Some(k) => {
                entry.insert(Some(k));
            }
            None if count_false_positive_class => {
                entry.insert(None);
            }
            None => {}
        }
    }
    let counts: Vec<usize> = classes.values().map(BTreeSet::len).filter(|&n| n > 0).collect();
    if counts.is_empty() {
        return Err(Error::NoClusters);
    }
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}

/// Mean over represented GT classes of the number of clusters containing
/// the class.
pub fn cs_frag(a: &ClusterAssignment) -> Result<f64> {
    let mut clusters: BTreeMap<u16, BTreeSet<u32>> = BTreeMap::new();
    for (c, i) in clustered(a) {
        if let Some(k) = a.points[i].gt_class {
            clusters.entry(k).or_default().insert(c);
        }
    }
    if clusters.is_empty() {
        return Err(Error::NoClasses);
    }
    Ok(clusters.values().map(BTreeSet::len).sum::<usize>() as f64 / clusters.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterScores {
    pub cs_inst: Option<f64>,
    pub cs_imp: Option<f64>,
    pub cs_frag: Option<f64>,
    /// Number of GT classes among clustered points.
    pub classes: usize,
    pub clusters: usize,
    pub noise: usize,
    pub count_false_positive_class: bool,
}

/// All three scores; a score is `None` where its inputs are missing.
pub fn cluster_scores(a: &ClusterAssignment, count_false_positive_class: bool) -> ClusterScores {
    let classes: BTreeSet<u16> = clustered(a).filter_map(|(_, i)| a.points[i].gt_class).collect();
    ClusterScores {
        cs_inst: cs_inst(a).ok(),
        cs_imp: cs_imp(a, count_false_positive_class).ok(),
        cs_frag: cs_frag(a).ok(),
        classes: classes.len(),
        clusters: a.cluster_count(),
        noise: a.noise_count(),
        count_false_positive_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EmbeddingPoint, Label, Pixel, SegmentOrigin};

    fn pt(class: Option<u16>, inst: Option<u16>) -> EmbeddingPoint {
        EmbeddingPoint {
            coords: [0.0, 0.0],
            origin: SegmentOrigin {
                sequence_id: "s".into(),
                frame_index: 0,
                segment_id: 1,
                track_id: 1,
            },
            gt_class: class,
            gt_instance: inst,
        }
    }

    fn assignment(rows: &[(Option<u16>, Option<u16>, Option<u32>)]) -> ClusterAssignment {
        ClusterAssignment::new(
            rows.iter().map(|&(c, i, _)| pt(c, i)).collect(),
            rows.iter().map(|s| s.2).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_instance() {
        let even = assignment(&[(Some(1), Some(1), Some(0)); 3].into_iter().chain([(Some(1), Some(1), Some(1)); 3]).collect::<Vec<_>>());
        assert_eq!(cs_inst(&even).unwrap(), 0.5);
    }

    #[test]
    fn false_positive_only_cluster() {
        let a = assignment(&[(Some(1), Some(1), Some(0)), (None, None, Some(1)), (Some(2), Some(2), None)]);
        assert_eq!(cs_imp(&a, false).unwrap(), 1.0);
        assert_eq!(cs_imp(&a, true).unwrap(), 1.0);
        let mixed = assignment(&[(Some(1), Some(1), Some(0)), (None, None, Some(0))]);
        assert_eq!(cs_imp(&mixed, true).unwrap(), 2.0);
        assert_eq!(cs_frag(&a).unwrap(), 1.0);
    }

    #[test]
    fn all_noise() {
        let a = assignment(&[(Some(1), Some(1), None)]);
        assert!(matches!(cs_inst(&a), Err(Error::NoInstances)));
        assert!(matches!(cs_imp(&a, false), Err(Error::NoClusters)));
        assert!(matches!(cs_frag(&a), Err(Error::NoClasses)));
        let s = cluster_scores(&a, false);
        assert_eq!((s.cs_inst, s.noise, s.clusters), (None, 1, 0));
    }

    #[test]
    fn gt_assignment() {
        // 1x16 frame: instance 2 (class 5) on 10 pixels, instance 1 (class 3) on 4
        let inst: Vec<u16> = (0..16).map(|c| if c < 10 { 2 } else if c < 14 { 1 } else { 0 }).collect();
        let class: Vec<u16> = inst.iter().map(|&i| [0, 3, 5][i as usize]).collect();
        let sem = inst.iter().map(|&i| if i > 0 { Label::Ood } else { Label::NotOod }).collect();
        let truth = FrameTruth::new(1, 16, sem, inst, class, None).unwrap();
        let seg = |cols: std::ops::Range<u32>| Segment::new(1, 0, cols.map(|c| Pixel::new(0, c)).collect(), 0.9).unwrap();
        assert_eq!(assign_gt(&seg(0..16), &truth).unwrap(), Some((5, 2)));
        assert_eq!(assign_gt(&seg(10..12), &truth).unwrap(), Some((3, 1)));
        assert_eq!(assign_gt(&seg(14..16), &truth).unwrap(), None);
        // 2 px each: tie goes to the smaller instance
        assert_eq!(assign_gt(&seg(8..12), &truth).unwrap(), Some((3, 1)));
        assert!(assign_gt(&seg(15..17), &truth).is_err());
    }
}
