use criterion::{black_box, criterion_group, criterion_main, Criterion};

use su2heat::sr_distance::cc_distance;
use su2heat::su2_kernel::{pt_cutlocus, pt_integral, pt_spectral, pt_spectral_jet};
use su2heat::{pt, KernelConfig};

fn kernel(c: &mut Criterion) {
    let cfg = KernelConfig::default();
    let mut g = c.benchmark_group("kernel");
    g.bench_function("spectral t=1", |b| b.iter(|| pt_spectral(black_box(1.0), 0.7, 1.1, 1e-13).unwrap()));
    g.bench_function("spectral t=0.05", |b| b.iter(|| pt_spectral(black_box(0.05), 0.7, 1.1, 1e-13).unwrap()));
    g.bench_function("spectral jet t=0.5", |b| b.iter(|| pt_spectral_jet(black_box(0.5), 0.7, 1.1, 1e-13).unwrap()));
    g.bench_function("integral t=0.1", |b| b.iter(|| pt_integral(black_box(0.1), 0.7, 1.1, &cfg.quad).unwrap()));
    g.bench_function("cut locus t=0.1", |b| b.iter(|| pt_cutlocus(black_box(0.1), 1.1).unwrap()));
    g.bench_function("dispatch t=0.02", |b| b.iter(|| pt(black_box(0.02), 0.7, 1.1, 1e-13).unwrap()));
    g.finish();
}

fn distance(c: &mut Criterion) {
    c.bench_function("cc_distance", |b| b.iter(|| cc_distance(black_box(0.7), black_box(1.1)).unwrap()));
}

criterion_group!(benches, kernel, distance);
criterion_main!(benches);
