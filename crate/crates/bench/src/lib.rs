//! Fixtures shared by the criterion benches.

use oodtrack_core::segmentation::{extract_segments, Mask};
use oodtrack_core::synth::{render_sequence, SynthConfig, SynthFrame};
use oodtrack_core::{FrameTruth, ScoreMap, Segment};

/// A noisy synthetic sequence with false-positive blobs.
pub fn scene(frames: u32) -> SynthConfig {
    SynthConfig {
        seed: 11,
        frame_count: frames,
        score_noise_sigma: 0.15,
        fp_blob_rate: 1.0,
        ..SynthConfig::default()
    }
}

pub struct Frames {
    pub scores: Vec<ScoreMap>,
    pub truths: Vec<FrameTruth>,
    pub segments: Vec<Vec<Segment>>,
}

pub fn frames(cfg: &SynthConfig, tau: f64) -> Frames {
    let rendered: Vec<SynthFrame> = render_sequence(cfg, 0).expect("synthetic config is valid");
    let roi = |f: &SynthFrame| Mask::new(cfg.height, cfg.width, f.roi.clone()).expect("roi matches frame");
    let segments = rendered
        .iter()
        .enumerate()
        .map(|(t, f)| extract_segments(&f.score, &roi(f), tau, 1, t as u32).expect("segments"))
        .collect();
    Frames {
        scores: rendered.iter().map(|f| f.score.clone()).collect(),
        truths: rendered.iter().map(|f| f.truth.clone()).collect(),
        segments,
    }
}

/// `n` points in `d` dimensions drawn around `k` centers, deterministic.
pub fn blobs(n: usize, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..n)
        .map(|i| (0..d).map(|j| 10.0 * ((i % k + j) % k) as f64 + next()).collect())
        .collect()
}
