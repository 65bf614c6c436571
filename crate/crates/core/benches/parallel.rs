//! Parallel kernels against a single worker. Build with
//! `--no-default-features` to measure the rayon-free build instead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use penny_core::contact_graph::ContactGraph;
use penny_core::faces::{faces_of, verify_face_metrics};
use penny_core::laplace::harmonic_measure;
use penny_core::lemmas::run_separation_suite;
use penny_core::metrics::{quasi_isometry_report, Window};
use penny_core::packing::{gen_square_lattice, gen_tangency_growth};
use penny_core::par::with_workers;
use penny_core::poly_growth::{dim_report, LatticeModel};
use penny_core::walk::simulate_visits;

const MODES: [(&str, Option<usize>); 2] = [("sequential", Some(1)), ("pool", None)];

fn bench_kernels(c: &mut Criterion) {
    let sq = ContactGraph::build(&gen_square_lattice(121, 121).unwrap()).unwrap();
    let sq_faces = faces_of(&sq).unwrap();
    let window = Window::new(&sq, &sq_faces);
    let x = window.deepest();
    let growth = ContactGraph::build(&gen_tangency_growth(4000, 1).unwrap()).unwrap();
    let growth_faces = faces_of(&growth).unwrap();
    let omega: Vec<usize> = sq.ball(x, 12).unwrap().members.into_iter().map(|v| v as usize).collect();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (mode, workers) in MODES {
        group.bench_function(BenchmarkId::new("separation_suite_50k", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(run_separation_suite(50_000, 0))))
        });
        group.bench_function(BenchmarkId::new("face_metrics_growth", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(verify_face_metrics(&growth, &growth_faces, 20, 0).unwrap())))
        });
        group.bench_function(BenchmarkId::new("quasi_isometry_5k", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(quasi_isometry_report(&sq, &sq_faces, 8, 5000, 0).unwrap())))
        });
        group.bench_function(BenchmarkId::new("harmonic_measure_b12", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(harmonic_measure(&sq, &omega).unwrap())))
        });
        group.bench_function(BenchmarkId::new("walk_20k_trials", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(simulate_visits(&sq, &window, x, 200, 20_000, 0).unwrap())))
        });
        group.bench_function(BenchmarkId::new("polydim_z2_k6", mode), |b| {
            b.iter(|| with_workers(workers, || black_box(dim_report(&LatticeModel::square(), 6).unwrap())))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);
