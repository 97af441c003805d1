//! End-to-end benchmarks for the detector and renderer hot paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use alarmsift_bench::bench_dataset;
use alarmsift_core::render::{render_overlay, OverlayStyle};
use alarmsift_core::{build_index, detect, knn_distance, score_windows, DetectorParams};

fn bench_knn_distance(c: &mut Criterion) {
    let ds = bench_dataset();
    let params = DetectorParams::for_anomaly_length(ds.anomaly().len());
    let index = build_index(ds.train(), params.window_len).unwrap();
    let query = &ds.test().values()[..params.window_len];

    c.bench_function("knn_distance", |b| {
        b.iter(|| knn_distance(black_box(query), &index, params.k).unwrap())
    });
}

fn bench_score_windows(c: &mut Criterion) {
    let ds = bench_dataset();
    let params = DetectorParams::for_anomaly_length(ds.anomaly().len());
    let index = build_index(ds.train(), params.window_len).unwrap();

    c.bench_function("score_windows", |b| {
        b.iter(|| score_windows(black_box(ds.test()), &index, &params).unwrap())
    });
}

fn bench_detect(c: &mut Criterion) {
    let ds = bench_dataset();
    let mut params = DetectorParams::for_anomaly_length(ds.anomaly().len());
    params.threshold = 1.0;
    let index = build_index(ds.train(), params.window_len).unwrap();

    c.bench_function("detect", |b| {
        b.iter(|| detect(black_box(ds.test()), &index, &params).unwrap())
    });
}

fn bench_render_overlay(c: &mut Criterion) {
    let ds = bench_dataset();
    let len = ds.anomaly().len().max(64);
    let actual = &ds.test().values()[..len];
    let prediction = &ds.train().values()[..len];
    let style = OverlayStyle::default();

    c.bench_function("render_overlay", |b| {
        b.iter(|| render_overlay(black_box(actual), black_box(prediction), &style).unwrap())
    });
}

criterion_group!(
    benches,
    bench_knn_distance,
    bench_score_windows,
    bench_detect,
    bench_render_overlay
);
criterion_main!(benches);
