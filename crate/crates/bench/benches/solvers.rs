use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vortexforge::{
    assemble_jacobian, make_grid, minimize, mp_solve, refine, residual, tent_profile,
    FluxTargets, MinimizeOptions, MpOptions, NewtonOptions, PhysicsParams, TentParams,
    VortexPair,
};

const RADIUS: f64 = 10.0;

fn tent_pair(n: usize) -> VortexPair {
    let grid = make_grid(RADIUS, n).unwrap();
    let params = PhysicsParams::new(1.0, 0.0, 1, RADIUS).unwrap();
    let a = tent_profile(&grid, &TentParams::for_radius(RADIUS, 1.0).unwrap()).unwrap();
    VortexPair::new(a.clone(), a, params).unwrap()
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [256, 1024, 4096] {
        let pair = tent_pair(n);
        group.bench_with_input(BenchmarkId::new("residual", n), &pair, |b, p| {
            b.iter(|| residual(black_box(p)))
        });
        group.bench_with_input(BenchmarkId::new("jacobian", n), &pair, |b, p| {
            b.iter(|| assemble_jacobian(black_box(p)))
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);

    let params = PhysicsParams::new(1.0, 0.0, 1, RADIUS).unwrap();
    let grid = make_grid(RADIUS, 256).unwrap();
    group.bench_function("mp_solve/256", |b| {
        b.iter(|| mp_solve(black_box(&params), &grid, &MpOptions::default()).unwrap())
    });

    let (pair, _) = mp_solve(&params, &grid, &MpOptions::default()).unwrap();
    let shifted = PhysicsParams::new(1.1, 0.0, 1, RADIUS).unwrap();
    let warm = VortexPair::new(pair.a1.clone(), pair.a2.clone(), shifted).unwrap();
    group.bench_function("refine/256", |b| {
        b.iter(|| refine(black_box(&warm), &NewtonOptions::default()).unwrap())
    });

    let targets = FluxTargets::new(std::f64::consts::PI, 2.0 * std::f64::consts::PI).unwrap();
    group.bench_function("minimize/256", |b| {
        b.iter(|| minimize(&grid, 1, black_box(&targets), &MinimizeOptions::default(), None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernels, solvers);
criterion_main!(benches);
