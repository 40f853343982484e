use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flocksim_bench::preset_fixture;

fn rk4_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4_step");
    for (dim, n) in [(1, 128), (1, 512), (2, 64)] {
        let (model, state) = preset_fixture(dim, n, 1.0);
        let dt = model.cfl_dt(&state, 0.4, 0.2);
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &state, |b, s| {
            b.iter(|| model.step(black_box(s), dt).unwrap())
        });
    }
    group.finish();
}

fn rhs(c: &mut Criterion) {
    let (model, state) = preset_fixture(2, 64, 1.5);
    c.bench_function("rhs_2d_64", |b| b.iter(|| model.rhs(black_box(&state)).unwrap()));
}

criterion_group!(benches, rk4_step, rhs);
criterion_main!(benches);
