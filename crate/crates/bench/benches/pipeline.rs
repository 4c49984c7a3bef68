use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use mvk_bench::cormier_fixture;
use mvk_core::edmd::{gram_matrix, spectrum, structure_matrix, OperatorKind};
use mvk_core::models::Cormier;
use mvk_core::{simulate_decoupled, simulate_ips, Dictionary, RngPlan, TimeGrid};
use ndarray::Array2;

fn bench_ips(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_ips");
    for &particles in &[1_000usize, 10_000] {
        let model = Cormier::new(14.0);
        let plan = RngPlan::new(1);
        let grid = TimeGrid::new(0.5, 5).unwrap();
        group.throughput(Throughput::Elements((particles * 5) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(particles), &particles, |b, &m| {
            b.iter(|| black_box(simulate_ips(&model, m, grid, &plan).unwrap()));
        });
    }
    group.finish();
}

fn bench_decoupled(c: &mut Criterion) {
    let (model, path, xi, grid) = cormier_fixture(5_000);
    let plan = RngPlan::new(2);
    c.bench_function("simulate_decoupled_5k", |b| {
        b.iter(|| {
            black_box(simulate_decoupled(&model, &path, xi.view(), grid, &plan).unwrap())
        });
    });
}

fn bench_matrix_assembly(c: &mut Criterion) {
    let (model, path, xi, grid) = cormier_fixture(5_000);
    let plan = RngPlan::new(3);
    let data = simulate_decoupled(&model, &path, xi.view(), grid, &plan).unwrap();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in data.xi().iter().chain(data.x_t().iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let dict = Dictionary::indicator_1d(lo, hi, 100).unwrap();
    c.bench_function("gram_matrix_5k_x_100", |b| {
        b.iter(|| black_box(gram_matrix(&dict, data.xi()).unwrap()));
    });
    c.bench_function("structure_matrix_5k_x_100", |b| {
        b.iter(|| black_box(structure_matrix(&dict, &data).unwrap()));
    });
}

fn bench_eigendecomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    for &n in &[50usize, 200] {
        let plan = RngPlan::new(4);
        let mut cur = plan.stream(n as u64).init_draws();
        // a contraction-like matrix with spectrum inside the unit disc
        let a = Array2::from_shape_fn((n, n), |_| cur.normal() / (n as f64).sqrt() * 0.5);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(spectrum(a.view(), 6, OperatorKind::Koopman).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_ips,
    bench_decoupled,
    bench_matrix_assembly,
    bench_eigendecomposition
);
criterion_main!(benches);
