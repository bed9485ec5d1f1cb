use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use torus_mfg::solver::{estimate_operator_norm, prox_primal_point, solve_time_dependent, InnerTolerance};
use torus_mfg::{Coupling, Hamiltonian};
use torus_mfg_bench::{cosine_problem, fixed_iterations};

fn prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("cell_prox");
    let cases = [
        ("quadratic", Hamiltonian::quadratic(vec![0.3]), Coupling::linear(1)),
        (
            "r1.5_q3",
            Hamiltonian::new(1.5, vec![1.2], vec![0.3]).unwrap(),
            Coupling::power(3.0, vec![0.8]).unwrap(),
        ),
        (
            "r3_log",
            Hamiltonian::new(3.0, vec![1.2], vec![0.3]).unwrap(),
            Coupling::Log,
        ),
    ];
    for (name, h, coupling) in &cases {
        group.bench_function(*name, |b| {
            b.iter(|| {
                prox_primal_point(
                    h,
                    coupling,
                    0,
                    black_box(-1.7),
                    black_box(&[0.9, -0.4]),
                    0.05,
                    InnerTolerance::default(),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn iterations(c: &mut Criterion) {
    let mut group = c.benchmark_group("primal_dual_50_iterations");
    group.sample_size(10);
    for n in [32, 64] {
        let (grid, model) = cosine_problem(n);
        let opts = fixed_iterations(50);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_time_dependent(&model, &grid, &opts).unwrap())
        });
    }
    group.finish();
}

fn operator_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_norm");
    group.sample_size(10);
    for n in [32, 64] {
        let (grid, _) = cosine_problem(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, g| {
            b.iter(|| estimate_operator_norm(g))
        });
    }
    group.finish();
}

criterion_group!(benches, prox, iterations, operator_norm);
criterion_main!(benches);
