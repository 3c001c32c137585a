use std::hint::black_box;

use affine_psd::riccati::{solve_riccati, SolverOptions};
use affine_psd::simulate::{simulate_paths, strato_correction, SimConfig};
use affine_psd::symcone::sqrt_psd;
use affine_psd::{AffineParams, LinearDrift, MatrixAtom, MatrixAtomMeasure, ScalarAtom, ScalarAtomMeasure, SymMat};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn test_matrix(d: usize) -> SymMat {
    SymMat::from_fn(d, |i, j| if i == j { 2.0 + i as f64 } else { 1.0 / (1.0 + (i + j) as f64) })
}

fn jump_params() -> AffineParams {
    let d = 2;
    AffineParams::new(
        SymMat::scaled_identity(d, 0.5),
        SymMat::scaled_identity(d, 1.0),
        LinearDrift::from_forward(d, |x| x * -1.0),
        0.1,
        SymMat::zeros(d),
        ScalarAtomMeasure::new(d, vec![ScalarAtom { xi: SymMat::scaled_identity(d, 0.3), weight: 1.0 }]).unwrap(),
        MatrixAtomMeasure::new(d, vec![MatrixAtom { xi: SymMat::from_diag(&[1.0, 0.5]), weight: SymMat::scaled_identity(d, 0.5) }])
            .unwrap(),
    )
    .unwrap()
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    for d in [2usize, 5, 10] {
        let x = test_matrix(d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &x, |b, x| b.iter(|| black_box(x).eigen()));
    }
    group.finish();
}

fn riccati(c: &mut Criterion) {
    let mut group = c.benchmark_group("riccati");
    let wishart = AffineParams::wishart(3, 2.0);
    let u = SymMat::identity(3);
    group.bench_function("wishart_d3_t1", |b| {
        b.iter(|| solve_riccati(black_box(&wishart), &u, 1.0, SolverOptions::default()).unwrap())
    });
    let jumps = jump_params();
    let u2 = SymMat::identity(2);
    group.bench_function("jumps_d2_t1", |b| {
        b.iter(|| solve_riccati(black_box(&jumps), &u2, 1.0, SolverOptions::default()).unwrap())
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    let wishart = AffineParams::wishart(2, 2.0);
    let cfg = SimConfig::new(1e-2, 1.0, 1_000, 7);
    group.bench_function("wishart_1000x100", |b| {
        b.iter(|| simulate_paths(black_box(&wishart), &SymMat::identity(2), &cfg).unwrap())
    });
    let jumps = jump_params();
    group.bench_function("jumps_1000x100", |b| {
        b.iter(|| simulate_paths(black_box(&jumps), &SymMat::identity(2), &cfg).unwrap())
    });
    group.finish();
}

fn correction(c: &mut Criterion) {
    let x = test_matrix(3);
    let sigma = sqrt_psd(&test_matrix(3)).unwrap().to_mat();
    c.bench_function("strato_correction_d3", |b| {
        b.iter(|| strato_correction(black_box(&x), &sigma, 1e-6, 2.0).unwrap())
    });
}

criterion_group!(benches, eigen, riccati, simulation, correction);
criterion_main!(benches);
