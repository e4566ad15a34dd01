use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flode_bench::{features, full_factors, model, random_digraph, self_loop_sna};
use flode_core::dynamics::euler_heat_step;
use flode_core::model::{forward, loss_and_grads};
use flode_core::spectral::{eigen_spectrum, svd_full, svd_truncated, FractionalOperator};
use flode_core::{ChannelMixer, Scheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn operator_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator");
    for n in [100, 400] {
        let g = random_digraph(n, 8.0, 1);
        group.bench_with_input(BenchmarkId::new("build_sna", n), &g, |b, g| b.iter(|| self_loop_sna(black_box(g))));
        let s = self_loop_sna(&g);
        group.bench_with_input(BenchmarkId::new("eigen_spectrum", n), &s, |b, s| {
            b.iter(|| eigen_spectrum(black_box(s.matrix()), false).unwrap())
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd");
    group.sample_size(10);
    for n in [200, 500] {
        let s = self_loop_sna(&random_digraph(n, 8.0, 2));
        group.bench_with_input(BenchmarkId::new("full", n), &s, |b, s| b.iter(|| svd_full(black_box(s)).unwrap()));
        group.bench_with_input(BenchmarkId::new("truncated_k64", n), &s, |b, s| {
            b.iter(|| svd_truncated(black_box(s), 64, 2).unwrap())
        });
    }
    group.finish();
}

fn dynamics(c: &mut Criterion) {
    let mut group = c.benchmark_group("dynamics");
    let n = 500;
    let f = full_factors(n, 3);
    let x = features(n, 16);
    let w = ChannelMixer::heat((0..16).map(|i| 0.1 * i as f64 - 0.8).collect());
    for alpha in [0.5, 1.0] {
        let op = FractionalOperator::new(f.clone(), alpha).unwrap();
        group.bench_function(BenchmarkId::new("apply", alpha), |b| b.iter(|| op.apply(black_box(&x)).unwrap()));
        group.bench_function(BenchmarkId::new("euler_heat_step", alpha), |b| {
            b.iter(|| euler_heat_step(black_box(&x), &op, &w, 0.1).unwrap())
        });
    }
    group.finish();
}

fn model_passes(c: &mut Criterion) {
    let mut group = c.benchmark_group("model");
    group.sample_size(20);
    let n = 300;
    let f = full_factors(n, 4);
    let x = features(n, 10).re().clone();
    let labels: Vec<usize> = (0..n).map(|i| i % 5).collect();
    let mask: Vec<usize> = (0..n).step_by(3).collect();
    for scheme in [Scheme::Heat, Scheme::Schrodinger] {
        let m = model(f.clone(), 10, 5, scheme);
        let name = format!("{scheme:?}").to_lowercase();
        group.bench_function(BenchmarkId::new("forward", &name), |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            b.iter(|| forward(black_box(&m), &x, true, &mut rng).unwrap())
        });
        group.bench_function(BenchmarkId::new("loss_and_grads", &name), |b| {
            b.iter(|| loss_and_grads(black_box(&m), &x, &labels, &mask).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, operator_construction, factorization, dynamics, model_passes);
criterion_main!(benches);
