//! Rayon with one worker against the default pool on the data-parallel
//! kernels. Build with `--no-default-features` for the purely sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qfi_core::controls::{gradient, gradient_check, ControlBasis, ControlProblem};
use qfi_core::dynamics::{HamiltonianSchedule, Storage};
use qfi_core::linalg::{identity, SparseOperator};
use qfi_core::pauli::{BoundaryCondition, SpinChain};

fn chain_problem(n: usize, steps: usize) -> ControlProblem {
    let chain = SpinChain::new(n, 0.5, 1.0, BoundaryCondition::Periodic).unwrap();
    let schedule = HamiltonianSchedule::chain(&chain, 1.0);
    let basis = ControlBasis::local_two_body(n, BoundaryCondition::Periodic).unwrap();
    ControlProblem::new(schedule, basis, 2.0, steps)
        .unwrap()
        .randomized(3, 0.1)
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", one), ("default", all)]
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("adjoint_gradient");
    g.sample_size(10);
    for n in [4usize, 6] {
        let p = chain_problem(n, 60);
        let eval = p.evaluate_with(Storage::Full).unwrap();
        for (label, pool) in pools() {
            g.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| pool.install(|| gradient(&p, &eval).unwrap()))
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("gradient_check");
    g.sample_size(10);
    let p = chain_problem(4, 40);
    for (label, pool) in pools() {
        g.bench_function(label, |b| {
            b.iter(|| pool.install(|| gradient_check(&p, 1e-5, 8, 1).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("sparse_apply");
    let chain = SpinChain::new(8, 0.5, 1.0, BoundaryCondition::Periodic).unwrap();
    let h = SparseOperator::from_pauli(&chain.hamiltonian(1.0));
    let m = identity(h.dim());
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new(label, 8), |b| b.iter(|| pool.install(|| h.apply(&m))));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
