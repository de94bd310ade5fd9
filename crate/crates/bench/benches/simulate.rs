use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mpsqvm::backend::Executor;
use mpsqvm::gates;
use mpsqvm::random_circuit::{generate_round_circuit, run_round_circuit, Budget, RoundCircuitSpec};
use mpsqvm::vqe::sweep;
use mpsqvm::{dense_run, parse, BackendConfig, EnergyMode, MpsState, PauliHamiltonian, ThetaGrid, TruncationPolicy};

/// A 12-qubit state whose middle bond has dimension `2^(12/2)`.
fn saturated_state() -> MpsState {
    let program = generate_round_circuit(&RoundCircuitSpec::new(12, 24, 0)).unwrap();
    let mut s = MpsState::with_policy(12, TruncationPolicy::exact()).unwrap();
    Executor::new(&mut s).run(&program).unwrap();
    s
}

fn two_site_update(c: &mut Criterion) {
    let base = saturated_state();
    let gate = gates::cnot() * gates::kron(&gates::ry(0.3), &gates::rx(1.1));
    let mut g = c.benchmark_group("two_site_update");
    for site in [0usize, 3, 5] {
        let chi = base.bond_dims()[site].max(base.bond_dims().get(site + 1).copied().unwrap_or(1));
        g.bench_with_input(BenchmarkId::new("chi", chi), &site, |b, &site| {
            b.iter_batched(
                || base.clone(),
                |mut s| s.apply_two_qubit_adjacent(black_box(&gate), site).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn round_circuits(c: &mut Criterion) {
    let mut g = c.benchmark_group("round_circuit");
    g.sample_size(20);
    for (n, rounds) in [(20usize, 2usize), (85, 2), (10, 10), (20, 6)] {
        let spec = RoundCircuitSpec::new(n, rounds, 1);
        g.bench_function(format!("n{n}_r{rounds}"), |b| {
            b.iter(|| run_round_circuit(black_box(&spec), TruncationPolicy::default(), Budget::default()).unwrap())
        });
    }
    g.finish();
}

fn mps_vs_dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("mps_vs_dense");
    g.sample_size(20);
    for n in [10usize, 16] {
        let program = generate_round_circuit(&RoundCircuitSpec::new(n, 4, 2)).unwrap();
        g.bench_function(BenchmarkId::new("dense", n), |b| b.iter(|| dense_run(black_box(&program), n).unwrap()));
        g.bench_function(BenchmarkId::new("mps", n), |b| {
            b.iter(|| {
                let mut s = MpsState::new(n).unwrap();
                Executor::new(&mut s).run(black_box(&program)).unwrap();
                s
            })
        });
    }
    g.finish();
}

fn vqe_sweep(c: &mut Criterion) {
    let unit = parse(include_str!("../../../data/h2.qk")).unwrap();
    let ansatz = unit.get("ansatz").unwrap();
    let h: PauliHamiltonian = include_str!("../../../data/h2_2q.ham").parse().unwrap();
    let grid = ThetaGrid::new(-PI, PI, 100).unwrap();
    c.bench_function("vqe_sweep_100", |b| {
        b.iter(|| sweep(ansatz, &h, &grid, &BackendConfig::default(), EnergyMode::Analytic).unwrap())
    });
}

criterion_group!(benches, two_site_update, round_circuits, mps_vs_dense, vqe_sweep);
criterion_main!(benches);
