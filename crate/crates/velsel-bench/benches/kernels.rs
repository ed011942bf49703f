//! Benchmarks for the hot paths: force evaluation, Verlet stepping,
//! sampling, classification, the phase-space quadrature, and deconvolution.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use velsel::ensemble::{classify, integrate, sample_cloud, IntegratorConfig};
use velsel::observables::{deconvolve_velocity, density_profile, BinSpec};
use velsel::potential::find_well_geometry;
use velsel::rng;
use velsel::theory::efficiency_quadrature;
use velsel_bench::{bench_cloud, bench_potential, constants};

fn bench_force(c: &mut Criterion) {
    let cfg = bench_potential();
    c.bench_function("force_in_gaussian_zone", |b| {
        b.iter(|| black_box(cfg.force(black_box(8e-6))))
    });
    c.bench_function("force_far_field", |b| {
        b.iter(|| black_box(cfg.force(black_box(4e-4))))
    });
}

fn bench_verlet(c: &mut Criterion) {
    let consts = constants();
    let cfg = bench_potential();
    let geom = find_well_geometry(&cfg, &consts);
    let cloud = bench_cloud(1_000);
    let ens = classify(sample_cloud(&cloud, 1, &consts).unwrap(), &cfg, &geom, &consts).unwrap();
    let icfg = IntegratorConfig {
        dt: 1e-6,
        t_total: 1e-3,
        record_stride: 1000,
    };
    c.bench_function("verlet_1k_atoms_1ms", |b| {
        b.iter_batched(
            || ens.clone(),
            |e| integrate(e, &cfg, &icfg, &consts).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_sampling(c: &mut Criterion) {
    let consts = constants();
    let cloud = bench_cloud(100_000);
    c.bench_function("sample_cloud_100k", |b| {
        b.iter(|| sample_cloud(&cloud, black_box(7), &consts).unwrap())
    });
    c.bench_function("normal_pair", |b| {
        b.iter(|| rng::standard_normal_pair(black_box(7), black_box(1234), 0))
    });
}

fn bench_classify(c: &mut Criterion) {
    let consts = constants();
    let cfg = bench_potential();
    let geom = find_well_geometry(&cfg, &consts);
    let ens = sample_cloud(&bench_cloud(100_000), 7, &consts).unwrap();
    c.bench_function("classify_100k", |b| {
        b.iter_batched(
            || ens.clone(),
            |e| classify(e, &cfg, &geom, &consts).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_quadrature(c: &mut Criterion) {
    let consts = constants();
    let cfg = bench_potential();
    let geom = find_well_geometry(&cfg, &consts);
    let cloud = bench_cloud(1);
    c.bench_function("efficiency_quadrature", |b| {
        b.iter(|| efficiency_quadrature(&cfg, &geom, &cloud, &consts).unwrap())
    });
}

fn bench_deconvolve(c: &mut Criterion) {
    let t = 20e-3;
    let mut z0 = Vec::with_capacity(100_000);
    let mut zt = Vec::with_capacity(100_000);
    for i in 0..100_000u64 {
        let (g, _) = rng::standard_normal_pair(9, i, 0);
        let u = 2.0 * rng::uniform_open01(9, i, 2) - 1.0;
        z0.push(20e-6 * g);
        zt.push(20e-6 * g + 0.02 * u * t);
    }
    let spec = BinSpec {
        lo: -1e-3,
        hi: 1e-3,
        bins: 1024,
    };
    let initial = density_profile(&z0, &spec).unwrap();
    let final_p = density_profile(&zt, &spec).unwrap();
    c.bench_function("deconvolve_1024_bins", |b| {
        b.iter(|| deconvolve_velocity(&final_p, &initial, t, 1e-3).unwrap())
    });
}

criterion_group!(
    benches,
    bench_force,
    bench_verlet,
    bench_sampling,
    bench_classify,
    bench_quadrature,
    bench_deconvolve
);
criterion_main!(benches);
