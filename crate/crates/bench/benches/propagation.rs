use criterion::{criterion_group, criterion_main, Criterion};

use penaltyguard::analysis::compute_f;
use penaltyguard::propagate::{diagonalize, evolve_stepped, PropagatorSettings};
use penaltyguard::StateVector;
use penaltyguard_bench::bench_instance;

fn matvec(c: &mut Criterion) {
    let inst = bench_instance(8, 32.0);
    let h = inst.hamiltonian_at(0.0).unwrap();
    let x = inst.initial_state();
    let mut y = StateVector::zeros(x.dim()).into_amplitudes();
    c.bench_function("matvec_4096", |b| b.iter(|| h.matvec_into(x.amplitudes(), &mut y)));
}

fn spectral(c: &mut Criterion) {
    let inst = bench_instance(4, 32.0);
    let h = inst.hamiltonian_at(0.0).unwrap();
    c.bench_function("diagonalize_256", |b| b.iter(|| diagonalize(&h).unwrap()));
    let sf = diagonalize(&h).unwrap();
    let psi = inst.initial_state();
    c.bench_function("spectral_evolve_256", |b| b.iter(|| sf.evolve(&psi, 1e6).unwrap()));
}

fn stepped(c: &mut Criterion) {
    let inst = bench_instance(4, 32.0);
    let h = inst.hamiltonian_at(0.0).unwrap();
    let psi = inst.initial_state();
    let s = PropagatorSettings::stepped();
    c.bench_function("stepped_256_t10", |b| b.iter(|| evolve_stepped(&h, &psi, 0.0, 10.0, &s).unwrap()));
}

fn error_operator(c: &mut Criterion) {
    let inst = bench_instance(4, 32.0);
    c.bench_function("compute_f_256", |b| b.iter(|| compute_f(&inst, &[1.0, 5.0, 20.0]).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = matvec, spectral, stepped, error_operator
}
criterion_main!(benches);
