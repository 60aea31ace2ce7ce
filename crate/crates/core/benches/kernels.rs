//! Kernel throughput on the global rayon pool versus a one-thread pool.
//!
//! Build with `--no-default-features` to time the purely sequential code path;
//! both groups then measure the same thing.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gowers_lab::corners::{enumerate_corners, PrimePointSet, SubsetRule};
use gowers_lab::gowers::{box_norm, dual_function, lambda_form, BoxNormContext};
use gowers_lab::grid::IndexSet;
use gowers_lab::verification::trial_functions;
use gowers_lab::weights::{corner_weight_system, Measure};
use rand::Rng;
use std::hint::black_box;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let wide = rayon::current_num_threads();
    let mut out = vec![("threads-1".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if wide > 1 {
        out.push((format!("threads-{wide}"), rayon::ThreadPoolBuilder::new().num_threads(wide).build().unwrap()));
    }
    out
}

fn measure(n: usize) -> Measure {
    let mut r = gowers_lab::rng::stream(1, 0);
    Measure::from_values((0..n).map(|_| r.gen_range(0.0..2.0)).collect()).unwrap()
}

fn gowers_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("gowers");
    group.sample_size(10);
    for n in [64usize, 128] {
        let ws = corner_weight_system(2, measure(n)).unwrap();
        let ctx = BoxNormContext::new(&ws, IndexSet::without(3, 1)).unwrap();
        let fs = trial_functions(2, n, 3, 7, 0).unwrap();
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(format!("box_norm/{name}"), n), &n, |b, _| {
                b.iter(|| pool.install(|| box_norm(black_box(&fs[0]), &ctx).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new(format!("dual/{name}"), n), &n, |b, _| {
                b.iter(|| pool.install(|| dual_function(black_box(&fs[0]), &ctx).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new(format!("lambda/{name}"), n), &n, |b, _| {
                b.iter(|| pool.install(|| lambda_form(black_box(&fs), &ws).unwrap()))
            });
        }
    }
    group.finish();
}

fn corner_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("corners");
    group.sample_size(10);
    for n in [4000u64, 8000] {
        let a = PrimePointSet::generate(2, n, SubsetRule::Full, None).unwrap();
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(format!("enumerate/{name}"), n), &n, |b, _| {
                b.iter(|| pool.install(|| enumerate_corners(black_box(&a)).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, gowers_kernels, corner_kernels);
criterion_main!(benches);
