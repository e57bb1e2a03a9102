use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pid_bench::{random_network, uniform_widths, REFERENCE_WIDTHS};
use pid_core::filtration::{masks_at_with, MaskMode};
use pid_core::{build_filtration, detect, DetectConfig};

fn reference_network(c: &mut Criterion) {
    let net = random_network(&REFERENCE_WIDTHS, 1);
    c.bench_function("filtration/reference", |b| {
        b.iter(|| build_filtration(black_box(&net), 0.0).unwrap())
    });
    let mut group = c.benchmark_group("detect/reference");
    for layer in [1, 2, 4] {
        let cfg = DetectConfig::new(layer, 2.0, 0.0);
        group.bench_with_input(BenchmarkId::from_parameter(layer), &cfg, |b, cfg| {
            b.iter(|| detect(black_box(&net), cfg).unwrap())
        });
    }
    group.finish();
}

fn pruning(c: &mut Criterion) {
    let net = random_network(&REFERENCE_WIDTHS, 2);
    let mut group = c.benchmark_group("detect/eta");
    for eta in [0.0, 0.1, 0.3] {
        let cfg = DetectConfig::new(1, 2.0, eta);
        group.bench_with_input(BenchmarkId::from_parameter(eta), &cfg, |b, cfg| {
            b.iter(|| detect(black_box(&net), cfg).unwrap())
        });
    }
    group.finish();
}

fn width_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect/width");
    group.sample_size(20);
    for width in [16, 32, 64, 128] {
        let net = random_network(&uniform_widths(10, width, 3), 3);
        let cfg = DetectConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(width), &net, |b, net| {
            b.iter(|| detect(black_box(net), &cfg).unwrap())
        });
    }
    group.finish();
}

fn single_threshold_masks(c: &mut Criterion) {
    let net = random_network(&uniform_widths(10, 32, 3), 4);
    let filt = build_filtration(&net, 0.0).unwrap();
    let lambda = filt.thresholds()[filt.thresholds().len() / 2];
    let mut group = c.benchmark_group("masks_at/median_threshold");
    for (name, mode) in [
        ("incremental", MaskMode::Incremental),
        ("naive", MaskMode::Naive),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| masks_at_with(black_box(&filt), lambda, 1, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    reference_network,
    pruning,
    width_scaling,
    single_threshold_masks
);
criterion_main!(benches);
