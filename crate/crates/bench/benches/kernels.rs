use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracinv_bench::{white_noise, SIZES};
use fracinv_core::fbm::{path_functionals, Type1Simulator, Type2Simulator};
use fracinv_core::fracops::{frac_coeffs, integrate_type2_direct, integrate_type2_fft, Type1Filter};
use fracinv_core::memtests::{bartlett_lrv_with, default_bandwidth, statistics, LrvMethod};
use fracinv_core::seed::rng_from_seed;

fn coefficients(c: &mut Criterion) {
    c.bench_function("frac_coeffs/1e6", |b| b.iter(|| frac_coeffs(black_box(0.3), 1_000_000).unwrap()));
}

fn type2_integration(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_type2");
    for n in SIZES {
        let u = white_noise(n, 1);
        if n <= 4096 {
            g.bench_with_input(BenchmarkId::new("direct", n), &u, |b, u| b.iter(|| integrate_type2_direct(u, 0.3).unwrap()));
        }
        g.bench_with_input(BenchmarkId::new("fft", n), &u, |b, u| b.iter(|| integrate_type2_fft(u, 0.3).unwrap()));
    }
    g.finish();
}

fn type1_filter(c: &mut Criterion) {
    let mut g = c.benchmark_group("type1_filter");
    g.sample_size(20);
    for n in SIZES {
        let filter = Type1Filter::new(0.3, n, 63 * n).unwrap();
        let u = white_noise(filter.input_len(), 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| filter.apply(u)));
    }
    g.finish();
}

fn long_run_variance(c: &mut Criterion) {
    let mut g = c.benchmark_group("bartlett_lrv");
    for n in SIZES {
        let x = white_noise(n, 3);
        let l = default_bandwidth(n);
        g.bench_with_input(BenchmarkId::new("direct", n), &x, |b, x| {
            b.iter(|| bartlett_lrv_with(x, l, LrvMethod::Direct).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fft", n), &x, |b, x| b.iter(|| bartlett_lrv_with(x, l, LrvMethod::Fft).unwrap()));
    }
    g.finish();
}

fn test_statistics(c: &mut Criterion) {
    let x = white_noise(16384, 4);
    c.bench_function("statistics/16384", |b| b.iter(|| statistics(black_box(&x), default_bandwidth(16384)).unwrap()));
}

fn fbm_paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("fbm_path");
    let one = Type1Simulator::new(0.3, 1024).unwrap();
    let two = Type2Simulator::new(0.3, 1024).unwrap();
    let mut rng = rng_from_seed(5);
    g.bench_function("type1/1024", |b| b.iter(|| path_functionals(&one.sample(&mut rng))));
    g.bench_function("type2/1024", |b| b.iter(|| path_functionals(&two.sample(&mut rng))));
    g.finish();
}

criterion_group!(
    kernels,
    coefficients,
    type2_integration,
    type1_filter,
    long_run_variance,
    test_statistics,
    fbm_paths
);
criterion_main!(kernels);
