//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::Path;

use oodtrack_core::io::Dataset;
use oodtrack_core::pipeline::{self, DetectOutput, TrackOutput, TrackerOverrides};
use oodtrack_core::segmentation::{connected_components, Mask};
use oodtrack_core::synth::{generate, Shape, SynthConfig, SynthObject};
use oodtrack_core::{FrameTruth, Label, Pixel, PixelSet, ScoreMap, Segment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Px = (u32, u32);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_set(p: &PixelSet) -> HashSet<Px> {
    p.iter().map(|q| (q.row, q.col)).collect()
}

pub fn from_set(s: &HashSet<Px>) -> PixelSet {
    s.iter().map(|&(r, c)| Pixel::new(r, c)).collect()
}

/// Random mask where each pixel is set with probability `density`.
pub fn random_mask(rng: &mut ChaCha8Rng, h: u32, w: u32, density: f64) -> Mask {
    let bits = (0..h * w).map(|_| rng.random::<f64>() < density).collect();
    Mask::new(h, w, bits).unwrap()
}

/// Up to three overlapping random rectangles (later ones on top) plus a
/// sprinkling of VOID pixels over the background.
pub fn random_truth(rng: &mut ChaCha8Rng, h: u32, w: u32) -> FrameTruth {
    let n = (h * w) as usize;
    let mut instance = vec![0u16; n];
    let mut class = vec![0u16; n];
    let objects = rng.random_range(0..=3u16);
    for id in 1..=objects {
        let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
        let (r1, c1) = ((r0 + rng.random_range(1..6)).min(h), (c0 + rng.random_range(1..6)).min(w));
        let k = rng.random_range(1..=3u16);
        for r in r0..r1 {
            for c in c0..c1 {
                instance[(r * w + c) as usize] = id;
                class[(r * w + c) as usize] = k;
            }
        }
    }
    let semantic = (0..n)
        .map(|i| {
            if instance[i] > 0 {
                Label::Ood
            } else if rng.random::<f64>() < 0.08 {
                Label::Void
            } else {
                Label::NotOod
            }
        })
        .collect();
    FrameTruth::new(h, w, semantic, instance, class, None).unwrap()
}

/// Segments from the components of a random mask biased towards the GT.
pub fn random_segments(rng: &mut ChaCha8Rng, truth: &FrameTruth) -> Vec<Segment> {
    let bits = truth
        .semantic()
        .iter()
        .map(|l| rng.random::<f64>() < if *l == Label::Ood { 0.7 } else { 0.12 })
        .collect();
    let mask = Mask::new(truth.height(), truth.width(), bits).unwrap();
    connected_components(&mask, 1)
        .into_iter()
        .enumerate()
        .map(|(i, p)| Segment::new(i as u32 + 1, 0, p, 0.9).unwrap())
        .collect()
}

/// Random score map with values on a coarse grid so that ties occur.
pub fn random_scores(rng: &mut ChaCha8Rng, truth: &FrameTruth) -> ScoreMap {
    let values = truth
        .semantic()
        .iter()
        .map(|l| {
            let base = if *l == Label::Ood { 0.3 } else { 0.0 };
            ((base + rng.random::<f64>() * 0.7) * 20.0).round() as f32 / 20.0
        })
        .collect();
    ScoreMap::new(truth.height(), truth.width(), values).unwrap()
}

/// 8-connected flood fill, components ordered by their first pixel in
/// row-major order.
pub fn flood_fill(mask: &Mask) -> Vec<BTreeSet<Px>> {
    let (h, w) = (mask.height(), mask.width());
    let mut seen = vec![false; (h * w) as usize];
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) || seen[(r * w + c) as usize] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([(r, c)]);
            seen[(r * w + c) as usize] = true;
            while let Some((y, x)) = queue.pop_front() {
                comp.insert((y, x));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                        if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                            continue;
                        }
                        let (ny, nx) = (ny as u32, nx as u32);
                        if mask.get(ny, nx) && !seen[(ny * w + nx) as usize] {
                            seen[(ny * w + nx) as usize] = true;
                            queue.push_back((ny, nx));
                        }
                    }
                }
            }
            out.push(comp);
        }
    }
    out
}

/// `|G ∩ K̂| / |(G ∪ K̂) \ other|` with K̂ the union of the predictions
/// touching G.
pub fn siou_oracle(gt: &HashSet<Px>, preds: &[HashSet<Px>], other: &HashSet<Px>) -> f64 {
    let k_hat: HashSet<Px> = preds
        .iter()
        .filter(|p| !p.is_disjoint(gt))
        .flat_map(|p| p.iter().copied())
        .collect();
    let inter = gt.intersection(&k_hat).count();
    if inter == 0 {
        return 0.0;
    }
    let union = gt.union(&k_hat).filter(|p| !other.contains(p)).count();
    inter as f64 / union as f64
}

fn truth_sets(truth: &FrameTruth) -> (BTreeMap<u16, HashSet<Px>>, HashSet<Px>, HashSet<Px>) {
    let w = truth.width();
    let mut objects: BTreeMap<u16, HashSet<Px>> = BTreeMap::new();
    let mut ood = HashSet::new();
    let mut void = HashSet::new();
    for (i, l) in truth.semantic().iter().enumerate() {
        let p = (i as u32 / w, i as u32 % w);
        match l {
            Label::Ood => {
                ood.insert(p);
                objects.entry(truth.instance()[i]).or_default().insert(p);
            }
            Label::Void => {
                void.insert(p);
            }
            Label::NotOod => {}
        }
    }
    (objects, ood, void)
}

/// Per-κ (TP, FN, FP) for one frame straight from the definitions, with
/// predicted pixels on VOID discarded.
pub fn counts_oracle(preds: &[Segment], truth: &FrameTruth, kappa: f64) -> (u64, u64, u64) {
    let (objects, ood, void) = truth_sets(truth);
    let restricted: Vec<HashSet<Px>> = preds
        .iter()
        .map(|s| to_set(&s.pixels).difference(&void).copied().collect::<HashSet<Px>>())
        .filter(|s| !s.is_empty())
        .collect();
    let (mut tp, mut fn_) = (0, 0);
    for g in objects.values() {
        let other: HashSet<Px> = ood.difference(g).copied().collect();
        if siou_oracle(g, &restricted, &other) > kappa {
            tp += 1;
        } else {
            fn_ += 1;
        }
    }
    let fp = restricted
        .iter()
        .filter(|p| p.intersection(&ood).count() as f64 / p.len() as f64 <= kappa)
        .count() as u64;
    (tp, fn_, fp)
}

/// Area under the precision-recall curve by sweeping every distinct score
/// as a `score >= t` threshold and integrating with trapezoids from
/// `(0, precision at the top threshold)`.
pub fn auprc_oracle(scores: &[ScoreMap], truths: &[FrameTruth]) -> f64 {
    let mut px: Vec<(f32, bool)> = Vec::new();
    for (s, t) in scores.iter().zip(truths) {
        for (v, l) in s.values().iter().zip(t.semantic()) {
            if *l != Label::Void {
                px.push((*v, *l == Label::Ood));
            }
        }
    }
    let pos = px.iter().filter(|p| p.1).count() as f64;
    let mut thresholds: Vec<f32> = px.iter().map(|p| p.0).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut points = Vec::new();
    for t in thresholds {
        let tp = px.iter().filter(|p| p.0 >= t && p.1).count() as f64;
        let fp = px.iter().filter(|p| p.0 >= t && !p.1).count() as f64;
        points.push((tp / pos, tp / (tp + fp)));
    }
    let mut area = 0.0;
    let mut prev = (0.0, points[0].1);
    for p in points {
        area += (p.0 - prev.0) * (p.1 + prev.1) / 2.0;
        prev = p;
    }
    area
}

/// A tracked prediction for the matching oracle.
pub struct OraclePred {
    pub track: u32,
    pub pixels: HashSet<Px>,
}

pub fn iou(a: &HashSet<Px>, b: &HashSet<Px>) -> f64 {
    let inter = a.intersection(b).count();
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / a.union(b).count() as f64
}

/// Result of matching one frame: sorted `(instance, track)` pairs and the
/// fp/fn/mme counts.
#[derive(Debug, PartialEq)]
pub struct OracleMatch {
    pub pairs: Vec<(u16, u32)>,
    pub fp: u64,
    pub fn_: u64,
    pub mme: u64,
}

/// Exhaustive matcher.
///
/// GT objects keep their previous track while the pair still overlaps.
/// Among all matchings of the rest (IoU > 0 only), pick the one whose pair
/// keys, each sorted best first by (IoU desc, instance asc, pred asc), form
/// the lexicographically best sequence, a longer sequence beating its own
/// prefix.
pub fn match_oracle(
    gts: &[(u16, HashSet<Px>)],
    preds: &[OraclePred],
    prev: &BTreeMap<u16, u32>,
    last: &mut BTreeMap<u16, u32>,
) -> OracleMatch {
    let mut gt_free: Vec<bool> = vec![true; gts.len()];
    let mut pred_free: Vec<bool> = vec![true; preds.len()];
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (gi, (inst, g)) in gts.iter().enumerate() {
        if let Some(&t) = prev.get(inst) {
            if let Some(pi) = (0..preds.len()).find(|&pi| pred_free[pi] && preds[pi].track == t && iou(g, &preds[pi].pixels) > 0.0) {
                gt_free[gi] = false;
                pred_free[pi] = false;
                chosen.push((gi, pi));
            }
        }
    }

    type Key = (f64, u16, usize);
    fn better(a: &[Key], b: &[Key]) -> bool {
        for (x, y) in a.iter().zip(b) {
            if x.0 != y.0 {
                return x.0 > y.0;
            }
            if x.1 != y.1 {
                return x.1 < y.1;
            }
            if x.2 != y.2 {
                return x.2 < y.2;
            }
        }
        a.len() > b.len()
    }
    fn search(
        gi: usize,
        gts: &[(u16, HashSet<Px>)],
        preds: &[OraclePred],
        gt_free: &[bool],
        pred_free: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        best: &mut Option<(Vec<Key>, Vec<(usize, usize)>)>,
    ) {
        if gi == gts.len() {
            let mut keys: Vec<Key> = current
                .iter()
                .map(|&(g, p)| (iou(&gts[g].1, &preds[p].pixels), gts[g].0, p))
                .collect();
            keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            if best.as_ref().is_none_or(|(bk, _)| better(&keys, bk)) {
                *best = Some((keys, current.clone()));
            }
            return;
        }
        search(gi + 1, gts, preds, gt_free, pred_free, current, best);
        if !gt_free[gi] {
            return;
        }
        for pi in 0..preds.len() {
            if pred_free[pi] && iou(&gts[gi].1, &preds[pi].pixels) > 0.0 {
                pred_free[pi] = false;
                current.push((gi, pi));
                search(gi + 1, gts, preds, gt_free, pred_free, current, best);
                current.pop();
                pred_free[pi] = true;
            }
        }
    }
    let mut best = None;
    search(0, gts, preds, &gt_free, &mut pred_free.clone(), &mut Vec::new(), &mut best);
    for &(g, p) in &best.unwrap().1 {
        gt_free[g] = false;
        pred_free[p] = false;
        chosen.push((g, p));
    }

    let mut pairs: Vec<(u16, u32)> = chosen.iter().map(|&(g, p)| (gts[g].0, preds[p].track)).collect();
    pairs.sort();
    let mut mme = 0;
    for &(inst, track) in &pairs {
        if last.insert(inst, track).is_some_and(|old| old != track) {
            mme += 1;
        }
    }
    OracleMatch {
        pairs,
        fp: pred_free.iter().filter(|f| **f).count() as u64,
        fn_: gt_free.iter().filter(|f| **f).count() as u64,
        mme,
    }
}

/// The clean three-object world, written to `dir` and run through
/// detection and tracking.
pub fn perfect_run(dir: &Path, seed: u64) -> (SynthConfig, Dataset, DetectOutput, TrackOutput) {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg, dir).unwrap();
    let ds = Dataset::load(dir.join("manifest.json")).unwrap();
    let detected = pipeline::detect(&ds, 0.72, 1).unwrap();
    let tracks = pipeline::track(&detected.sequences, &TrackerOverrides::default(), seed).unwrap();
    (cfg, ds, detected, tracks)
}

/// Noisy scene for the track-length filter: six long-lived objects in two
/// shape classes, three short-lived ones, per-pixel score noise and false
/// positive blobs.
pub fn retrieval_scene(seed: u64) -> SynthConfig {
    let objects = (0..9u32)
        .map(|k| {
            let class = (k % 2) as u16 + 1;
            let short = k >= 6;
            let (row, col) = if short {
                (20.0 + 30.0 * (k - 6) as f64, 100.0)
            } else {
                (14.0 + 16.0 * k as f64, 12.0 + ((k as u64 * 7 + seed) % 10) as f64)
            };
            let entry = if short { ((k as u64 * 11 + seed * 3) % 30) as u32 } else { 0 };
            SynthObject {
                class_id: class,
                shape: if class == 1 {
                    Shape::Disk { radius: 5.0 }
                } else {
                    Shape::Rectangle {
                        half_height: 4.0,
                        half_width: 6.0,
                    }
                },
                initial_center: [row, col],
                velocity: [0.0, if short { 0.3 } else { 1.0 }],
                color: if class == 1 { [210, 50, 50] } else { [50, 70, 210] },
                entry_frame: entry,
                exit_frame: short.then_some(entry + 6),
            }
        })
        .collect();
    SynthConfig {
        seed,
        height: 110,
        width: 128,
        frame_count: 40,
        objects,
        score_noise_sigma: 0.2,
        fp_blob_rate: 1.0,
        ..SynthConfig::default()
    }
}
