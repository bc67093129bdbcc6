//! Grid sweeps on the full rayon pool against a one-thread pool. Built
//! without the `parallel` feature both variants run the sequential path.

use std::f64::consts::PI;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hup_core::curve::{Angle, Curve, Point2};
use hup_core::dynamics::{detect_periodic_orbit, lift_for_angles};
use hup_core::measure::{annihilator_search, check_annihilation, transform_sweep, Density, SearchConfig};
use hup_core::transform::fourier_slice_check;
use rayon::ThreadPool;

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("pool", all), ("sequential", one)]
}

fn sweeps(c: &mut Criterion) {
    let circle = Arc::new(Curve::circle());
    let f = Density::real(&circle, "sin4", |s| (4.0 * PI * s).sin());
    let lines = [Angle::new(0.0), Angle::new(PI / 2.0), Angle::new(PI / 4.0)];
    let xis: Vec<Point2> = (0..256).map(|i| Angle::new(0.3).direction() * (-40.0 + 80.0 * i as f64 / 255.0)).collect();
    let slice_xis: Vec<f64> = (0..81).map(|i| -20.0 + 0.5 * i as f64).collect();
    let lift = lift_for_angles(circle.clone(), Angle::new(0.0), Angle::new(1.0)).unwrap();
    let cfg = SearchConfig { grid_size: 1024, iterations: 200, ..SearchConfig::default() };

    let mut g = c.benchmark_group("sweeps");
    g.sample_size(10);
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new("check_annihilation", label), |b| {
            b.iter(|| pool.install(|| black_box(check_annihilation(&f, &circle, &lines, (-50.0, 50.0), 501))))
        });
        g.bench_function(BenchmarkId::new("transform_sweep", label), |b| {
            b.iter(|| pool.install(|| black_box(transform_sweep(&f, &circle, &xis, 1e-9))))
        });
        g.bench_function(BenchmarkId::new("fourier_slice_check", label), |b| {
            b.iter(|| pool.install(|| black_box(fourier_slice_check(&f, &circle, Angle::new(0.7), &slice_xis).unwrap())))
        });
        g.bench_function(BenchmarkId::new("detect_periodic_orbit", label), |b| {
            b.iter(|| pool.install(|| black_box(detect_periodic_orbit(&lift, 64, 1e-9).unwrap())))
        });
        g.bench_function(BenchmarkId::new("annihilator_search", label), |b| {
            b.iter(|| {
                pool.install(|| black_box(annihilator_search(circle.clone(), Angle::new(0.0), Angle::new(1.0), &cfg).unwrap()))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
