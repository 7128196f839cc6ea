use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use wtsynth_bench::{gradient_case, signal_pair};
use wtsynth_core::optimize::backward;
use wtsynth_core::{multiscale_loss, multiscale_loss_grad, SpectralConfig};

fn loss(c: &mut Criterion) {
    let cfg = SpectralConfig::default();
    let mut group = c.benchmark_group("multiscale");
    for len in [4000, 16000] {
        let (x, y) = signal_pair(len);
        group.bench_function(BenchmarkId::new("loss", len), |b| {
            b.iter(|| multiscale_loss(black_box(&x), black_box(&y), &cfg).unwrap())
        });
        group.bench_function(BenchmarkId::new("grad", len), |b| {
            b.iter(|| multiscale_loss_grad(black_box(&x), black_box(&y), &cfg).unwrap())
        });
    }
    group.finish();
}

fn fit_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward");
    group.sample_size(20);
    for n in [4, 20] {
        let case = gradient_case(n, 1.0);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| backward(black_box(&case.params), &case.f0, &case.target, &case.config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, loss, fit_step);
criterion_main!(benches);
