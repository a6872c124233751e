use std::hint::black_box;

use cmt_bench::{bundled, six_dim};
use cmt_core::{
    analyze, eigen_split, integrate, linear_part, solve_centre_manifold, to_eigenbasis, AnalysisOptions,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen_split");
    for (name, spec) in [("generic3d", bundled("generic3d")), ("six_dim", six_dim())] {
        let lin = linear_part(&spec).unwrap();
        group.bench_function(name, |b| b.iter(|| eigen_split(black_box(&lin), 1e-9).unwrap()));
    }
    group.finish();
}

fn manifold(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_centre_manifold");
    for (name, spec) in [("generic3d", bundled("generic3d")), ("six_dim", six_dim())] {
        let split = eigen_split(&linear_part(&spec).unwrap(), 1e-9).unwrap();
        let sys = to_eigenbasis(&spec, &split).unwrap();
        for order in 2..=4 {
            group.bench_with_input(BenchmarkId::new(name, order), &order, |b, &k| {
                b.iter(|| solve_centre_manifold(black_box(&sys), k).unwrap())
            });
        }
    }
    group.finish();
}

fn full(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    for name in ["protein", "generic3d"] {
        let spec = bundled(name);
        let opts = AnalysisOptions::default();
        group.bench_function(name, |b| b.iter(|| analyze(black_box(&spec), &opts).unwrap()));
    }
    group.finish();
}

fn rk4(c: &mut Criterion) {
    let spec = bundled("generic3d");
    c.bench_function("rk4_generic3d_10k_steps", |b| {
        b.iter(|| integrate(&spec.field, black_box(&[0.05, 0.0, 0.02]), 10.0, 1e-3).unwrap())
    });
}

criterion_group!(benches, spectral, manifold, full, rk4);
criterion_main!(benches);
