use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use dingstab::catalog::entry;
use dingstab::destabilizer::{optimal_destabilizer, Solver, SolverOptions};
use dingstab::geodesic::{GeodesicRay, QuadratureConfig};
use dingstab::invariants::invariant_report;
use dingstab::io::parse_pl;
use dingstab::moments::moment_table;
use dingstab::stability::classify;

fn moments(c: &mut Criterion) {
    let b1 = entry("B1").unwrap().pair;
    c.bench_function("moment_table/B1/degree2", |b| b.iter(|| moment_table(black_box(&b1.delta), 2)));
    let hex = entry("reflexive2d/6a").unwrap().pair;
    c.bench_function("classify/6a", |b| b.iter(|| classify(black_box(&hex)).unwrap()));
}

fn destabilizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("destabilizer");
    group.sample_size(10);
    for label in ["reflexive2d/6d", "B1"] {
        let pair = entry(label).unwrap().pair;
        for solver in [Solver::Newton, Solver::FixedPoint] {
            group.bench_function(format!("{label}/{}", solver.as_str()), |b| {
                b.iter(|| optimal_destabilizer(&pair, solver, &SolverOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn invariants(c: &mut Criterion) {
    let pair = entry("reflexive2d/7b").unwrap().pair;
    let g = parse_pl(r#"{"pieces": [[0, 0, 0], [0, 1, 0], [-1, 1, 2]]}"#, 2).unwrap();
    c.bench_function("invariant_report/7b", |b| b.iter(|| invariant_report(&pair, black_box(&g)).unwrap()));
}

fn geodesic(c: &mut Criterion) {
    let pair = entry("P2").unwrap().pair;
    let g = parse_pl(r#"{"pieces": [[0, 0, 0], [0, 1, 0], [0, 0, 1]]}"#, 2).unwrap();
    let ray = GeodesicRay::new(&pair, &g, &QuadratureConfig::default()).unwrap();
    c.bench_function("partition_function/P2/t=10", |b| b.iter(|| ray.partition_function(black_box(10.0)).unwrap()));
}

criterion_group!(benches, moments, destabilizer, invariants, geodesic);
criterion_main!(benches);
