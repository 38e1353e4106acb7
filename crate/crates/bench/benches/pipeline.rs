use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use oodtrack_bench::{blobs, frames, scene};
use oodtrack_core::metrics::{default_kappa_grid, pixel_metrics, segment_metrics};
use oodtrack_core::retrieval::{dbscan_cluster, pca_reduce, tsne_embed, DbscanConfig, TsneConfig};
use oodtrack_core::segmentation::{extract_segments, Mask};
use oodtrack_core::tracker::{track_sequence, TrackerConfig};

fn segmentation(c: &mut Criterion) {
    let cfg = scene(1);
    let f = frames(&cfg, 0.72);
    let roi = Mask::full(cfg.height, cfg.width);
    c.bench_function("extract_segments", |b| {
        b.iter(|| extract_segments(&f.scores[0], &roi, 0.72, 1, 0).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let f = frames(&scene(10), 0.72);
    let grid = default_kappa_grid();
    c.bench_function("pixel_metrics_10_frames", |b| b.iter(|| pixel_metrics(&f.scores, &f.truths).unwrap()));
    c.bench_function("segment_metrics_10_frames", |b| {
        b.iter(|| segment_metrics(&f.segments, &f.truths, &grid).unwrap())
    });
}

fn tracking(c: &mut Criterion) {
    let cfg = scene(30);
    let f = frames(&cfg, 0.72);
    let tc = TrackerConfig::for_frame(cfg.height, cfg.width);
    c.bench_function("track_sequence_30_frames", |b| {
        b.iter_batched(|| f.segments.clone(), |segs| track_sequence("s", segs, &tc, 0), BatchSize::SmallInput)
    });
}

fn retrieval(c: &mut Criterion) {
    let data = blobs(200, 64, 4);
    c.bench_function("pca_200x64", |b| b.iter(|| pca_reduce(&data, 50).unwrap()));
    let reduced = pca_reduce(&data, 20).unwrap().projected;
    let tsne = TsneConfig {
        iterations: 250,
        perplexity: 20.0,
        ..TsneConfig::default()
    };
    let mut g = c.benchmark_group("tsne");
    g.sample_size(10);
    g.bench_function("tsne_200_points_250_iters", |b| b.iter(|| tsne_embed(&reduced, &tsne).unwrap()));
    g.finish();
    let pts: Vec<[f64; 2]> = tsne_embed(&reduced, &tsne).unwrap();
    c.bench_function("dbscan_200", |b| b.iter(|| dbscan_cluster(&pts, &DbscanConfig::default()).unwrap()));
}

criterion_group!(benches, segmentation, metrics, tracking, retrieval);
criterion_main!(benches);
