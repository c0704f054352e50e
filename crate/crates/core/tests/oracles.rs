//! Dense brute-force oracles for the sparse and factorized code paths.

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use penaltyguard::analysis::partial_trace_env;
use penaltyguard::model::{assemble, ModelConfig, ScheduleConfig, ScheduleKind, PauliTerm};
use penaltyguard::propagate::{evolve_stepped, evolve_stepped_series, PropagatorSettings, TimeDependentHamiltonian};
use penaltyguard::state::overlap_deficit;
use penaltyguard::{pauli_sum_to_operator, HermitianOperator, Pauli, PauliString, PauliSum, QubitRegister, StateVector};

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn pauli_matrix(p: Pauli) -> Mat<Complex64> {
    let m = p.matrix();
    Mat::from_fn(2, 2, |i, j| m[i][j])
}

fn dense_kron(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Single-qubit matrix `m` on qubit `q` of `n`, qubit 0 most significant.
fn on_qubit(m: &Mat<Complex64>, q: usize, n: usize) -> Mat<Complex64> {
    let mut out = Mat::<Complex64>::identity(1, 1);
    for k in 0..n {
        let f = if k == q { m.clone() } else { Mat::identity(2, 2) };
        out = dense_kron(&out, &f);
    }
    out
}

fn dot(n: [f64; 3], q: usize, total: usize) -> Mat<Complex64> {
    let mut out = Mat::<Complex64>::zeros(1 << total, 1 << total);
    for (p, c) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().zip(n) {
        let m = on_qubit(&pauli_matrix(p), q, total);
        out += Mat::<Complex64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c);
    }
    out
}

fn scaled(m: &Mat<Complex64>, c: f64) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)
}

fn max_diff(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn small_config(seed: u64) -> ModelConfig {
    let mut cfg = ModelConfig::paper_default(seed);
    cfg.n_env = 4;
    cfg.e_penalty = 8.0;
    cfg
}

#[test]
fn environment_matches_hand_assembly() {
    let inst = assemble(&small_config(3)).unwrap();
    let n = 4;
    let mut h = Mat::<Complex64>::zeros(16, 16);
    for s in &inst.environment.draws.sites {
        h += scaled(&dot(s.n, s.site, n), s.alpha);
    }
    for b in &inst.environment.draws.bonds {
        h += scaled(&(dot(b.m, b.b, n) * dot(b.l, b.c, n)), b.alpha);
    }
    assert_eq!(inst.environment.draws.bonds.len(), 6);
    assert!(max_diff(&h, &inst.h_env().to_dense()) < 1e-14);
}

#[test]
fn coupling_matches_hand_assembly() {
    let inst = assemble(&small_config(4)).unwrap();
    let total = inst.reg.n_total();
    let mut v = Mat::<Complex64>::zeros(inst.dim(), inst.dim());
    for c in &inst.coupling.draws.fields {
        let w = inst.reg.system(c.system);
        let e = inst.reg.env(c.env);
        v += scaled(&dot(c.n, w, total), c.beta);
        v += scaled(&(dot(c.m, w, total) * dot(c.l, e, total)), c.gamma);
    }
    assert!(max_diff(&v, &inst.v.to_dense()) < 1e-14);
    let mut sum = HermitianOperator::zeros(inst.dim());
    for b in &inst.v_blocks {
        sum = sum.add(b).unwrap();
    }
    assert!(max_diff(&sum.to_dense(), &inst.v.to_dense()) < 1e-14);
}

#[test]
fn kron_and_embed_match_dense() {
    let reg = QubitRegister::system_only(2).unwrap();
    let a = pauli_sum_to_operator(
        &PauliSum::from_terms([
            PauliString::new(0.3, [(0, Pauli::X), (1, Pauli::Y)]),
            PauliString::single(1, Pauli::Z, -1.2),
        ]),
        &reg,
        true,
    )
    .unwrap();
    let b = pauli_sum_to_operator(&PauliSum::from_terms([PauliString::single(0, Pauli::Y, 0.7)]), &reg, true).unwrap();
    let k = a.kron(&b);
    assert!(max_diff(&k.to_dense(), &dense_kron(&a.to_dense(), &b.to_dense())) < 1e-15);
    let e = a.embed(2, 4);
    let id = |n| Mat::<Complex64>::identity(n, n);
    let expect = dense_kron(&dense_kron(&id(2), &a.to_dense()), &id(4));
    assert!(max_diff(&e.to_dense(), &expect) < 1e-15);
}

#[test]
fn pauli_strings_match_dense_products() {
    let n = 3;
    let reg = QubitRegister::system_only(n).unwrap();
    let s = PauliString::new(Complex64::new(0.5, 0.0), [(0, Pauli::Y), (2, Pauli::X)]);
    let op = pauli_sum_to_operator(&PauliSum::from_terms([s]), &reg, true).unwrap();
    let expect = scaled(
        &(on_qubit(&pauli_matrix(Pauli::Y), 0, n) * on_qubit(&pauli_matrix(Pauli::X), 2, n)),
        0.5,
    );
    assert!(max_diff(&op.to_dense(), &expect) < 1e-15);
}

#[test]
fn sparse_matvec_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = assemble(&small_config(2)).unwrap();
    let h = inst.hamiltonian_at(0.0).unwrap();
    let x = StateVector::random(h.dim(), &mut rng);
    let y = h.apply(&x).unwrap();
    let d = h.to_dense();
    let xv = x.amplitudes();
    let mut worst = 0.0f64;
    for i in 0..h.dim() {
        let yi: Complex64 = (0..h.dim()).map(|j| d[(i, j)] * xv[j]).sum();
        worst = worst.max((yi - y.amplitudes()[i]).norm());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn partial_trace_matches_naive_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reg = QubitRegister::new(4, 8).unwrap();
    let psi = StateVector::random(reg.dim(), &mut rng);
    let rho = partial_trace_env(&psi, &reg).unwrap();
    let (sd, ed) = (reg.system_dim(), reg.env_dim());
    let a = psi.amplitudes();
    let naive = Mat::<Complex64>::from_fn(sd, sd, |i, j| {
        (0..ed).fold(C0, |acc, e| acc + a[i * ed + e] * a[j * ed + e].conj())
    });
    assert!(max_diff(&rho, &naive) < 1e-14);
}

/// Classical RK4 on `i dpsi/dt = H(t) psi` with a fixed small step.
fn rk4<H: TimeDependentHamiltonian>(h: &H, psi: &StateVector, t1: f64, steps: usize) -> StateVector {
    let n = psi.dim();
    let dt = t1 / steps as f64;
    let mut x = psi.amplitudes().to_vec();
    let deriv = |t: f64, v: &[Complex64]| {
        let mut y = vec![C0; n];
        h.apply_at(t, v, &mut y);
        y.iter_mut().for_each(|z| *z *= Complex64::new(0.0, -1.0));
        y
    };
    let axpy = |v: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
        v.iter().zip(k).map(|(a, b)| a + b * c).collect()
    };
    for s in 0..steps {
        let t = s as f64 * dt;
        let k1 = deriv(t, &x);
        let k2 = deriv(t + 0.5 * dt, &axpy(&x, &k1, 0.5 * dt));
        let k3 = deriv(t + 0.5 * dt, &axpy(&x, &k2, 0.5 * dt));
        let k4 = deriv(t + dt, &axpy(&x, &k3, dt));
        for i in 0..n {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    StateVector::from_amplitudes(x)
}

#[test]
fn stepped_schedule_matches_fine_rk4() {
    let mut cfg = small_config(6);
    cfg.h_comp = ScheduleConfig {
        kind: ScheduleKind::LinearInterpolation,
        endpoints: vec![vec![PauliTerm::new(1.0, "X")], vec![PauliTerm::new(1.0, "Z")]],
        total_time: 2.0,
    };
    let inst = assemble(&cfg).unwrap();
    let h = inst.hamiltonian().unwrap();
    let psi = inst.initial_state();
    let stepped = evolve_stepped(&h, &psi, 0.0, 2.0, &PropagatorSettings::stepped()).unwrap();
    let oracle = rk4(&h, &psi, 2.0, 20_000);
    let d = overlap_deficit(&oracle.normalized().unwrap(), &stepped).unwrap();
    assert!(d.abs() < 1e-8, "{d}");
}

#[test]
fn stepped_composition_and_energy() {
    let inst = assemble(&small_config(7)).unwrap();
    let h = inst.hamiltonian_at(0.0).unwrap();
    let psi = inst.initial_state();
    let s = PropagatorSettings::stepped();
    let mid = evolve_stepped(&h, &psi, 0.0, 3.0, &s).unwrap();
    let two = evolve_stepped(&h, &mid, 3.0, 7.0, &s).unwrap();
    let one = evolve_stepped(&h, &psi, 0.0, 7.0, &s).unwrap();
    assert!(overlap_deficit(&one, &two).unwrap().abs() < 1e-8);
    let (states, _) = evolve_stepped_series(&h, &psi, 0.0, &[0.0, 5.0, 50.0], &s).unwrap();
    let e0 = h.expectation(&states[0], &states[0]).unwrap().re;
    for st in &states {
        assert!((st.norm() - 1.0).abs() < 1e-9);
        let e = h.expectation(st, st).unwrap().re;
        assert!((e - e0).abs() <= 1e-8 * e0.abs().max(1.0), "{e} vs {e0}");
    }
}
