use penaltyguard::analysis::{
    compute_f, fidelity_point, longterm_fidelity, protection_time, ScanOptions,
};
use penaltyguard::harness::{
    emit_csv, read_series_csv, run_experiment, ExperimentPlan, GridPoint, OutputKind, ProtectionSettings, RunRecord,
    TimeGrid, SERIES_HEADER,
};
use penaltyguard::model::{assemble, ModelConfig, SystemStateConfig, SystemStateKind};
use penaltyguard::propagate::{evolve_pair, InstancePropagator, PropagatorSettings};
use penaltyguard::Error;

fn small(seed: u64, lambda: f64, e_penalty: f64) -> ModelConfig {
    let mut cfg = ModelConfig::paper_default(seed);
    cfg.n_env = 4;
    cfg.lambda = lambda;
    cfg.e_penalty = e_penalty;
    cfg
}

fn plan(grid: Vec<GridPoint>) -> ExperimentPlan {
    ExperimentPlan {
        name: "pipeline".into(),
        base_config: small(3, 0.1, 0.0),
        grid,
        time_grid: TimeGrid::Log {
            start: 0.1,
            stop: 100.0,
            points: 7,
        },
        outputs: vec![OutputKind::Series, OutputKind::ProtectionTime],
        settings: PropagatorSettings::default(),
        protection: ProtectionSettings {
            threshold: 0.9,
            scan: ScanOptions::default(),
        },
        long_term_times: vec![1e5],
    }
}

fn point(e_penalty: f64, lambda: f64) -> GridPoint {
    GridPoint {
        e_penalty,
        lambda,
        seed: 3,
        initial_system_state: None,
    }
}

fn strip_clock(mut r: Vec<RunRecord>) -> Vec<RunRecord> {
    r.iter_mut().for_each(|x| x.wall_clock_s = 0.0);
    r
}

#[test]
fn runs_are_deterministic_and_round_trip_through_csv() {
    let p = plan(vec![point(0.0, 0.1), point(16.0, 0.1)]);
    let a = strip_clock(run_experiment(&p, 1).unwrap());
    let b = strip_clock(run_experiment(&p, 2).unwrap());
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.is_ok()));

    let dir = tempfile::tempdir().unwrap();
    let files = emit_csv(&a, dir.path()).unwrap();
    let short = &p.hash()[..12];
    assert!(files.iter().all(|f| f.file_name().unwrap().to_string_lossy().contains(short)));
    let series = files.iter().find(|f| f.to_string_lossy().contains("ep16")).unwrap();
    let text = std::fs::read_to_string(series).unwrap();
    assert_eq!(text.lines().next().unwrap(), SERIES_HEADER.join(","));
    assert!(!text.contains('\r'));
    let rows = read_series_csv(series).unwrap();
    for (row, pt) in rows.iter().zip(&a[1].series) {
        assert_eq!(*row, [pt.t, pt.total_sq, pt.system_sq, pt.codespace_prob]);
    }
    let prot = files.iter().find(|f| f.to_string_lossy().ends_with("protection.csv")).unwrap();
    let text = std::fs::read_to_string(prot).unwrap();
    assert!(text.starts_with("e_penalty,lambda,seed,t_prot,e_over_lambda_sq\n"));
}

#[test]
fn failing_point_does_not_stop_the_others() {
    let p = plan(vec![point(16.0, 0.1), point(1e308, 1e308)]);
    let r = run_experiment(&p, 1).unwrap();
    assert!(r[0].is_ok());
    assert!(!r[1].is_ok(), "{:?}", r[1].series.first());
    assert!(r[1].series.is_empty());
}

#[test]
fn invalid_plans_fail_before_compute() {
    let p = plan(vec![point(f64::NAN, 0.1)]);
    assert!(matches!(run_experiment(&p, 1), Err(Error::Validation(_))));
    let mut text = serde_json::to_value(plan(vec![point(1.0, 0.1)])).unwrap();
    text["extra"] = serde_json::json!(true);
    assert!(ExperimentPlan::from_json(&text.to_string()).is_err());
}

#[test]
fn zero_coupling_keeps_fidelity_one() {
    let inst = assemble(&small(2, 0.0, 8.0)).unwrap();
    let tr = evolve_pair(&inst, &[0.0, 1.0, 50.0, 1e4], &PropagatorSettings::default()).unwrap();
    for k in 0..tr.times.len() {
        let pt = fidelity_point(tr.times[k], &tr.phi[k], &tr.phi0_system[k], &tr.phi0_env[k], &inst.fam.total_p_system)
            .unwrap();
        assert!((pt.total_sq - 1.0).abs() < 1e-9, "{pt:?}");
        assert!((pt.codespace_prob - 1.0).abs() < 1e-9);
    }
    let prot = protection_time(&inst, 0.9, &ScanOptions {
        t_max: 1e6,
        ..ScanOptions::default()
    })
    .unwrap();
    assert_eq!(prot.t_prot, None);
}

#[test]
fn unprotected_decay_crosses_threshold() {
    let inst = assemble(&small(2, 0.3, 0.0)).unwrap();
    let prot = protection_time(&inst, 0.9, &ScanOptions::default()).unwrap();
    let t = prot.t_prot.expect("decay without penalty");
    assert!(t > 0.0 && t < 1e3, "{t}");
}

#[test]
fn outside_codespace_is_rejected() {
    let inst = assemble(&small(2, 0.1, 8.0)).unwrap();
    let prop = InstancePropagator::new(&inst, PropagatorSettings::default()).unwrap();
    let mut bad = inst.psi_system.clone();
    bad.amplitudes_mut().iter_mut().enumerate().for_each(|(i, a)| *a += if i == 3 { 0.1 } else { 0.0 });
    let bad = bad.normalized().unwrap();
    assert!(matches!(
        prop.trajectory(&bad, &inst.psi_env, &[0.0], true),
        Err(Error::Contract(_))
    ));
}

/// At small `lambda`, `1 - F^2 = c lambda^2` with `c <= |F(t)|^2`.
#[test]
fn infidelity_is_quadratic_and_bounded_by_f() {
    let t = 5.0;
    let base = assemble(&small(4, 0.01, 8.0)).unwrap();
    let f = compute_f(&base, &[t]).unwrap()[0].norm;
    let mut coeffs = Vec::new();
    for lambda in [0.001, 0.003, 0.01] {
        let inst = base.with_couplings(lambda, 8.0).unwrap();
        let tr = evolve_pair(&inst, &[t], &PropagatorSettings::default()).unwrap();
        let pt = fidelity_point(t, &tr.phi[0], &tr.phi0_system[0], &tr.phi0_env[0], &inst.fam.total_p_system).unwrap();
        coeffs.push((1.0 - pt.total_sq) / (lambda * lambda));
    }
    assert!(((coeffs[0] - coeffs[2]) / coeffs[0]).abs() < 0.2, "{coeffs:?}");
    for c in &coeffs {
        assert!(*c <= 1.2 * f * f, "{c} vs |F|^2 = {}", f * f);
    }
}

#[test]
fn dephasing_extremes_on_small_instance() {
    let mut cfg = small(5, 0.1, 64.0);
    cfg.initial_system_state = SystemStateConfig {
        kind: SystemStateKind::PlusL,
        coeffs: vec![],
    };
    let inst = assemble(&cfg).unwrap();
    let lt = longterm_fidelity(&inst, &[1e6, 2e6, 3e6]).unwrap();
    assert!((lt.alpha_sq - 1.0).abs() < 1e-12);
    assert!((lt.predicted - 1.0).abs() < 1e-12);
    assert!(lt.samples.iter().all(|s| (0.0..=1.0 + 1e-12).contains(s)));
}
