use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use oodtrack_core::io::Dataset;
use oodtrack_core::pipeline::{self, EvaluateOptions, TrackerOverrides};
use oodtrack_core::synth::{generate, perturb_dataset, render_frame, PerturbOp, SynthConfig};

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn noisy(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        frame_count: 6,
        sequence_count: 2,
        score_noise_sigma: 0.2,
        fp_blob_rate: 1.5,
        drop_detection_prob: 0.2,
        labeled_every: 2,
        ..SynthConfig::default()
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(&noisy(5), a.path()).unwrap();
    generate(&noisy(5), b.path()).unwrap();
    generate(&noisy(6), c.path()).unwrap();
    let (ta, tb, tc) = (tree_bytes(a.path()), tree_bytes(b.path()), tree_bytes(c.path()));
    assert!(ta.len() > 10);
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
}

#[test]
fn written_dataset_reads_back_as_rendered() {
    let cfg = noisy(2);
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(&cfg, dir.path()).unwrap();
    let ds = Dataset::load(dir.path().join("manifest.json")).unwrap();
    assert_eq!(ds.manifest, manifest);
    for (s, seq) in ds.manifest.sequences.iter().enumerate() {
        assert_eq!(seq.frames.len(), cfg.frame_count as usize);
        for f in &seq.frames {
            let frame = render_frame(&cfg, s as u32, f.frame_index).unwrap();
            assert_eq!(ds.score_map(f).unwrap(), frame.score);
            assert_eq!(ds.roi(f).unwrap().unwrap(), frame.roi);
            assert_eq!(ds.image(f).unwrap().unwrap(), frame.image);
            assert_eq!(f.labeled, cfg.is_labeled(f.frame_index));
            match ds.truth(f).unwrap() {
                Some(t) => assert_eq!(t, frame.truth),
                None => assert!(!f.labeled),
            }
        }
    }
}

#[test]
fn dataset_perturbations() {
    let dir = tempfile::tempdir().unwrap();
    generate(&noisy(1), dir.path()).unwrap();
    let ds = Dataset::load(dir.path().join("manifest.json")).unwrap();

    let out = tempfile::tempdir().unwrap();
    let dropped = perturb_dataset(
        &ds,
        &PerturbOp::DropFrames {
            sequence_id: "seq000".into(),
            frames: vec![1, 3],
        },
        out.path(),
    )
    .unwrap();
    let reloaded = Dataset::load(out.path().join("manifest.json")).unwrap();
    assert_eq!(reloaded.manifest, dropped);
    for f in &reloaded.manifest.sequences[0].frames {
        let blank = reloaded.score_map(f).unwrap().values().iter().all(|v| *v == 0.0);
        assert_eq!(blank, f.frame_index == 1 || f.frame_index == 3);
        assert_eq!(reloaded.truth(f).unwrap(), ds.truth(&ds.manifest.sequences[0].frames[f.frame_index as usize]).unwrap());
    }
    let other = &reloaded.manifest.sequences[1].frames[1];
    assert!(reloaded.score_map(other).unwrap().values().iter().any(|v| *v > 0.5));

    let out = tempfile::tempdir().unwrap();
    let same = perturb_dataset(&ds, &PerturbOp::JitterScores { sigma: 0.0, seed: 3 }, out.path()).unwrap();
    let reloaded = Dataset::load(out.path().join("manifest.json")).unwrap();
    assert_eq!(reloaded.manifest, same);
    for (a, b) in ds.manifest.sequences[0].frames.iter().zip(&reloaded.manifest.sequences[0].frames) {
        assert_eq!(ds.score_map(a).unwrap(), reloaded.score_map(b).unwrap());
        assert_eq!(ds.truth(a).unwrap(), reloaded.truth(b).unwrap());
    }

    let out = tempfile::tempdir().unwrap();
    perturb_dataset(&ds, &PerturbOp::JitterScores { sigma: 0.05, seed: 3 }, out.path()).unwrap();
    let jittered = Dataset::load(out.path().join("manifest.json")).unwrap();
    let f = &jittered.manifest.sequences[0].frames[0];
    let moved = jittered.score_map(f).unwrap();
    assert_ne!(moved, ds.score_map(&ds.manifest.sequences[0].frames[0]).unwrap());
    assert!(moved.values().iter().all(|v| (0.0..=1.0).contains(v)));

    let swap = PerturbOp::SwapTrackIds {
        sequence_id: "seq000".into(),
        track_id: 1,
        from_frame: 2,
    };
    assert!(perturb_dataset(&ds, &swap, out.path()).is_err());
}

#[test]
fn dropped_frame_lowers_mota_by_its_objects() {
    let dir = tempfile::tempdir().unwrap();
    generate(&SynthConfig::default(), dir.path()).unwrap();
    let ds = Dataset::load(dir.path().join("manifest.json")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let op = PerturbOp::DropFrames {
        sequence_id: "seq000".into(),
        frames: vec![4],
    };
    perturb_dataset(&ds, &op, out.path()).unwrap();
    let mota = |ds: &Dataset| {
        let det = pipeline::detect(ds, 0.72, 1).unwrap();
        let tr = pipeline::track(&det.sequences, &TrackerOverrides::default(), 0).unwrap();
        let opts = EvaluateOptions {
            pixel: false,
            segment: false,
            ..EvaluateOptions::default()
        };
        let t = pipeline::evaluate(ds, None, Some(&tr), None, &opts).unwrap().tracking.unwrap();
        (t.mota, t.object_frames, t.mme)
    };
    let (base, g, _) = mota(&ds);
    assert_eq!(base, 1.0);
    let (after, _, mme) = mota(&Dataset::load(out.path().join("manifest.json")).unwrap());
    assert_eq!(mme, 0);
    assert_eq!(after, 1.0 - 3.0 / g as f64);
}
