use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fanocav::ldos::{Cavity, EmitterCoupling};
use fanocav::observables::{fano_setup, PipelineSettings};
use fanocav::par;
use fanocav::phonons::{PhononCorrelations, PhononEnv};
use fanocav::quad::linspace;
use fanocav::scattering::{CavityGeometry, FanoMirror, Parity};

fn mirror(gamma_f: f64) -> FanoMirror {
    let w0 = 1010.0 * PI;
    FanoMirror::symmetric(-FRAC_1_SQRT_2, gamma_f, 0.01, w0 - 0.2 * PI, Parity::Even).unwrap()
}

fn ldos_grid(c: &mut Criterion) {
    let cavity = Cavity::new(mirror(1.5).response().unwrap(), CavityGeometry::standard(10.0), 6e-4);
    let omega = linspace(3150.0, 3200.0, 20_000);
    let mut group = c.benchmark_group("ldos_20k");
    group.bench_function("parallel", |b| b.iter(|| par::map(&omega, |&w| black_box(cavity.ldos(0.0, w).unwrap()))));
    group.bench_function("sequential", |b| b.iter(|| par::map_sequential(&omega, |&w| black_box(cavity.ldos(0.0, w).unwrap()))));
    group.finish();
}

fn sweep_points(c: &mut Criterion) {
    let settings = PipelineSettings { sanity_samples: 0, ..Default::default() };
    let corr = PhononCorrelations::tabulate(&PhononEnv::new(0.069, 1.45, 4.0).unwrap(), 0.01, 1e-10).unwrap();
    let setup = fano_setup(&mirror(1.1), CavityGeometry::standard(10.0), 6e-4, &settings.fit).unwrap();
    let offsets = linspace(-0.5, 0.5, 4);
    let point = |o: &f64| {
        let em = EmitterCoupling::new(6e-4, 3e-5, setup.peak + o).unwrap();
        setup.point(&em, &corr, &settings).unwrap().delta
    };
    let mut group = c.benchmark_group("indistinguishability_4_points");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| black_box(par::map(&offsets, point))));
    group.bench_function("sequential", |b| b.iter(|| black_box(par::map_sequential(&offsets, point))));
    group.finish();
}

criterion_group!(benches, ldos_grid, sweep_points);
criterion_main!(benches);
