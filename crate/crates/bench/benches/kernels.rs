// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use ptwave_bench::{bump, kdv_problem};
use ptwave_core::petviashvili::{petviashvili_step, solve};
use ptwave_core::spectral::{dealiased_product, forward_transform};
use ptwave_core::{IterationSettings, MpeConfig};

const SIZES: [usize; 3] = [256, 1024, 4096];

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("transform_round_trip");
    for n in SIZES {
        let (_, grid) = kdv_problem(50.0, n).unwrap();
        let values = bump(&grid).values().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| {
            b.iter(|| {
                forward_transform(black_box(v), &grid)
                    .unwrap()
                    .values()
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn products(c: &mut Criterion) {
    let mut g = c.benchmark_group("dealiased_cubic_product");
    for n in SIZES {
        let (_, grid) = kdv_problem(50.0, n).unwrap();
        let f = bump(&grid);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| dealiased_product(black_box(&[f, f, f])).unwrap())
        });
    }
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("petviashvili_step");
    for n in SIZES {
        let (sp, grid) = kdv_problem(50.0, n).unwrap();
        let f = bump(&grid);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| petviashvili_step(&sp, black_box(f)).unwrap())
        });
    }
    g.finish();
}

fn kdv_solve(c: &mut Criterion) {
    let (sp, grid) = kdv_problem(50.0, 1024).unwrap();
    let u0 = bump(&grid);
    let settings = IterationSettings::default();
    let mpe = MpeConfig::default();
    let mut g = c.benchmark_group("kdv_solve_n1024");
    g.sample_size(20);
    g.bench_function("plain", |b| {
        b.iter(|| solve(&sp, &grid, black_box(&u0), &settings, None).unwrap())
    });
    g.bench_function("mpe", |b| {
        b.iter(|| solve(&sp, &grid, black_box(&u0), &settings, Some(&mpe)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, transforms, products, steps, kdv_solve);
criterion_main!(benches);
