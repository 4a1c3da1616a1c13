use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpmix_bench::{spatial, two_species};
use fpmix_core::operator::{implicit_collision_step, moment_consistent_step};
use fpmix_core::timeloop::step_transport;
use fpmix_core::{moments, step_homogeneous, CollisionContext, StepOptions};

fn single_species(c: &mut Criterion) {
    let mut group = c.benchmark_group("collision_step");
    for n in [128usize, 256, 1024] {
        let (system, state) = two_species(n);
        let grid = system.grid();
        let f = &state.species[1];
        let own = moments(f, grid, 1.0).unwrap();
        let ctx = CollisionContext::new(0.2, 1.4, 1.0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("implicit", n), &n, |b, _| {
            b.iter(|| implicit_collision_step(black_box(f), &ctx, grid, 0.01).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("moment_consistent", n), &n, |b, _| {
            b.iter(|| moment_consistent_step(black_box(f), &ctx, grid, 0.01, &own).unwrap())
        });
    }
    group.finish();
}

fn homogeneous(c: &mut Criterion) {
    let (system, state) = two_species(256);
    let plain = StepOptions::new(0.01);
    let corrected = StepOptions { correct_moments: true, ..plain };
    c.bench_function("step_homogeneous/256", |b| {
        b.iter(|| step_homogeneous(black_box(&state), &system, &plain).unwrap())
    });
    c.bench_function("step_homogeneous_corrected/256", |b| {
        b.iter(|| step_homogeneous(black_box(&state), &system, &corrected).unwrap())
    });
}

fn transport(c: &mut Criterion) {
    let (system, xgrid, state) = spatial(128, 64);
    c.bench_function("step_transport/64x128", |b| {
        b.iter(|| step_transport(black_box(&state), system.grid(), &xgrid, 0.01).unwrap())
    });
}

criterion_group!(benches, single_species, homogeneous, transport);
criterion_main!(benches);
