use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use penaltyguard::analysis::{
    check_density, partial_trace_env, phase_integral, system_fidelity_sq, toy_model, total_fidelity_sq,
    transition_probability, ToyModelParams,
};
use penaltyguard::harness::{fit_through_origin, fmt_f64, TimeGrid};
use penaltyguard::model::{assemble, ModelConfig};
use penaltyguard::propagate::diagonalize;
use penaltyguard::{
    commutator, pauli_sum_to_operator, spectral_norm, Pauli, PauliString, PauliSum, QubitRegister, StateVector,
};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    (proptest::collection::vec(pauli(), n), 0.1..2.0f64)
        .prop_map(|(ps, c)| PauliString::new(c, ps.into_iter().enumerate()))
}

fn op(s: &PauliString, reg: &QubitRegister) -> penaltyguard::HermitianOperator {
    pauli_sum_to_operator(&PauliSum::from_terms([s.clone()]), reg, false).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn string_product_matches_operator_product(a in string(3), b in string(3)) {
        let reg = QubitRegister::system_only(3).unwrap();
        let lhs = op(&a.mul(&b), &reg);
        let rhs = op(&a, &reg).mul(&op(&b, &reg)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn commutation_flag_matches_commutator(a in string(3), b in string(3)) {
        let reg = QubitRegister::system_only(3).unwrap();
        let c = commutator(&op(&a, &reg), &op(&b, &reg)).unwrap().max_abs();
        prop_assert_eq!(a.commutes_with(&b), c < 1e-12);
    }

    #[test]
    fn real_sums_are_hermitian_and_norm_bounded(terms in proptest::collection::vec(string(3), 1..6)) {
        let reg = QubitRegister::system_only(3).unwrap();
        let sum = PauliSum::from_terms(terms.clone());
        let h = pauli_sum_to_operator(&sum, &reg, true).unwrap();
        prop_assert!(h.hermiticity_residual() < 1e-12);
        let norm = spectral_norm(&h).unwrap().value;
        let l1: f64 = terms.iter().map(|t| t.coefficient.norm()).sum();
        prop_assert!(norm <= l1 + 1e-9);
        prop_assert!(norm + 1e-9 >= h.max_abs());
    }

    #[test]
    fn reduced_states_are_densities(seed in any::<u64>(), n_sys in 1usize..4, n_env in 1usize..4) {
        let reg = QubitRegister::new(n_sys, n_env).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = StateVector::random(reg.dim(), &mut rng);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let rho = partial_trace_env(&psi, &reg).unwrap();
        prop_assert!(check_density(&rho).is_ok());
        let phi = StateVector::random(reg.system_dim(), &mut rng);
        let f = system_fidelity_sq(&phi, &rho).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        let other = StateVector::random(reg.dim(), &mut rng);
        let g = total_fidelity_sq(&psi, &other).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
    }

    #[test]
    fn kron_norm_is_multiplicative(seed in any::<u64>(), a in 1usize..5, b in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = StateVector::random(1 << a, &mut rng).scaled(Complex64::new(1.5, 0.0));
        let y = StateVector::random(1 << b, &mut rng);
        prop_assert!((x.kron(&y).norm() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn phase_integral_matches_quadrature(w in -50.0..50.0f64, t in 0.0..3.0f64) {
        let n = 40_000;
        let h = t / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += Complex64::from_polar(1.0, w * (k as f64 + 0.5) * h) * h;
        }
        let exact = phase_integral(w, t);
        prop_assert!((acc - exact).norm() < 1e-5 * (1.0 + t), "{} vs {}", acc, exact);
    }

    #[test]
    fn toy_probabilities_are_bounded(lp in 0.0..0.3f64, lm in 0.0..0.3f64, ep in 20.0..500.0f64,
                                     t in 0.0..1e4f64) {
        let p = ToyModelParams { omega: 1.0, lambda_plus: lp, lambda_minus: lm, e_penalty: ep };
        let r = toy_model(&p).unwrap();
        prop_assert!(r.exact[0] <= r.exact[1] && r.exact[1] <= r.exact[2]);
        let trace: f64 = r.exact.iter().sum();
        prop_assert!((trace - ep).abs() < 1e-9 * ep);
        let pr = transition_probability(&p, &[t]).unwrap()[0];
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pr));
    }

    #[test]
    fn numbers_survive_csv_formatting(v in any::<f64>()) {
        let s = fmt_f64(v);
        let back: f64 = s.parse().unwrap();
        if v.is_nan() {
            prop_assert!(back.is_nan());
        } else {
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn log_grids_increase(start in 1e-3..1.0f64, decades in 0.5..8.0f64, points in 2usize..300) {
        let g = TimeGrid::Log { start, stop: start * 10f64.powf(decades), points };
        prop_assert!(g.validate().is_ok());
        let t = g.times();
        prop_assert_eq!(t.len(), points);
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fit_recovers_proportional_data(slope in 1e-3..1e3f64, xs in proptest::collection::vec(0.1..1e4f64, 3..20)) {
        let y: Vec<f64> = xs.iter().map(|x| slope * x).collect();
        let f = fit_through_origin(&xs, &y).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9 * slope);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn instances_are_deterministic_and_evolution_unitary(seed in 0u64..1000, t in 0.0..1e6f64) {
        let mut cfg = ModelConfig::paper_default(seed);
        cfg.n_env = 4;
        cfg.e_penalty = 16.0;
        let a = assemble(&cfg).unwrap();
        let b = assemble(&cfg).unwrap();
        prop_assert_eq!(&a.config_hash, &b.config_hash);
        prop_assert!(a.v.sub(&b.v).unwrap().max_abs() == 0.0);
        prop_assert_eq!(a.initial_state(), b.initial_state());
        let sf = diagonalize(&a.hamiltonian_at(0.0).unwrap()).unwrap();
        let phi = sf.evolve(&a.initial_state(), t).unwrap();
        prop_assert!((phi.norm() - 1.0).abs() < 1e-9);
    }
}
