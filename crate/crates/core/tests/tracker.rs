use std::collections::BTreeSet;

use oodtrack_core::tracker::{step4_regress, track_sequence, TrackerConfig};
use oodtrack_core::{Center, Pixel, PixelSet, Segment, Track};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk(id: u32, frame: u32, cv: f64, ch: f64, r: f64) -> Segment {
    let px: PixelSet = (0..100u32)
        .flat_map(|v| (0..100u32).map(move |h| Pixel::new(v, h)))
        .filter(|p| (p.row as f64 - cv).hypot(p.col as f64 - ch) <= r)
        .collect();
    Segment::new(id, frame, px, 0.9).unwrap()
}

/// Straight-line fit through the normal equations of `x = a + b f`.
fn ols_oracle(obs: &[(u32, f64)], target: u32) -> f64 {
    let n = obs.len() as f64;
    let sf: f64 = obs.iter().map(|o| o.0 as f64).sum();
    let sff: f64 = obs.iter().map(|o| (o.0 as f64).powi(2)).sum();
    let sx: f64 = obs.iter().map(|o| o.1).sum();
    let sfx: f64 = obs.iter().map(|o| o.0 as f64 * o.1).sum();
    let det = n * sff - sf * sf;
    let a = (sff * sx - sf * sfx) / det;
    let b = (n * sfx - sf * sx) / det;
    a + b * target as f64
}

#[test]
fn regression_matches_normal_equations_on_noisy_tracks() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let len = rng.random_range(2..12u32);
        let start = rng.random_range(0..20u32);
        let (v0, h0) = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let (dv, dh) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let frames: Vec<u32> = (start..start + len).filter(|_| rng.random::<f64>() < 0.8).collect();
        let centers: Vec<(u32, Center)> = frames
            .iter()
            .map(|&f| {
                let k = (f - start) as f64;
                (f, Center::new(v0 + dv * k + rng.random_range(-1.0..1.0), h0 + dh * k + rng.random_range(-1.0..1.0)))
            })
            .collect();
        let track = Track {
            track_id: 1,
            entries: frames.iter().map(|&f| (f, 1)).collect(),
            centers: centers.clone(),
        };
        let window = rng.random_range(2..8u32);
        let Some(&(last, _)) = centers.last() else { continue };
        let target = last + 1 + rng.random_range(0..3u32);
        let used: Vec<&(u32, Center)> = centers.iter().filter(|(f, _)| target - f <= window).collect();
        let got = step4_regress(&track, target, window, 2);
        if used.len() < 2 {
            assert_eq!(got, None);
            continue;
        }
        let got = got.expect("enough observations");
        let v: Vec<(u32, f64)> = used.iter().map(|(f, c)| (*f, c.v)).collect();
        let h: Vec<(u32, f64)> = used.iter().map(|(f, c)| (*f, c.h)).collect();
        assert!((got.v - ols_oracle(&v, target)).abs() < 1e-8, "{} vs {}", got.v, ols_oracle(&v, target));
        assert!((got.h - ols_oracle(&h, target)).abs() < 1e-8);
    }
}

#[test]
fn regression_refuses_long_gaps() {
    let track = Track {
        track_id: 1,
        entries: vec![(0, 1), (1, 1), (2, 1)],
        centers: (0..3).map(|f| (f, Center::new(10.0, 10.0 + 2.0 * f as f64))).collect(),
    };
    assert_eq!(step4_regress(&track, 5, 5, 2), Some(Center::new(10.0, 20.0)));
    assert_eq!(step4_regress(&track, 6, 5, 2), None);
}

/// Two objects pass each other on separate rows; the first one vanishes for
/// two frames mid-way and must come back under its old id.
#[test]
fn identities_survive_crossing_and_short_occlusion() {
    let frames: Vec<Vec<Segment>> = (0..20u32)
        .map(|t| {
            let mut segs = Vec::new();
            let a = (30.0, 10.0 + 3.0 * t as f64);
            let b = (44.0, 90.0 - 3.0 * t as f64);
            if !(10..12).contains(&t) {
                segs.push(disk(1, t, a.0, a.1, 4.0));
            }
            segs.push(disk(segs.len() as u32 + 1, t, b.0, b.1, 4.0));
            segs
        })
        .collect();
    let cfg = TrackerConfig::for_frame(100, 100);
    let pred = track_sequence("s", frames, &cfg, 3);
    assert_eq!(pred.tracks.len(), 2, "{:?}", pred.tracks.iter().map(|t| t.len()).collect::<Vec<_>>());
    let rows: Vec<BTreeSet<u32>> = pred
        .tracks
        .iter()
        .map(|t| {
            t.entries
                .iter()
                .map(|&(f, s)| {
                    let seg = pred.frames[f as usize].iter().find(|x| x.segment_id == s).unwrap();
                    seg.center.v.round() as u32
                })
                .collect()
        })
        .collect();
    assert!(rows.iter().all(|r| r.len() == 1), "a track jumped between objects: {rows:?}");
    let lens: BTreeSet<usize> = pred.tracks.iter().map(|t| t.len()).collect();
    assert_eq!(lens, BTreeSet::from([18, 20]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Separated objects moving slowly get exactly one track each.
    #[test]
    fn perfect_inputs_give_one_track_per_object(
        starts in proptest::collection::vec((10.0f64..40.0, -1.5f64..1.5), 1..4),
        frames in 2u32..12,
        seed in 0u64..1000,
    ) {
        let n = starts.len();
        let seqs: Vec<Vec<Segment>> = (0..frames)
            .map(|t| {
                starts
                    .iter()
                    .enumerate()
                    .map(|(k, &(h, vel))| disk(k as u32 + 1, t, 15.0 + 25.0 * k as f64, h + vel * t as f64, 3.0))
                    .collect()
            })
            .collect();
        let pred = track_sequence("s", seqs, &TrackerConfig::for_frame(100, 100), seed);
        prop_assert_eq!(pred.tracks.len(), n);
        for t in &pred.tracks {
            prop_assert_eq!(t.len(), frames as usize);
        }
        let ids: BTreeSet<u32> = pred.tracks.iter().map(|t| t.track_id).collect();
        prop_assert_eq!(ids, (1..=n as u32).collect::<BTreeSet<_>>());
    }
}
