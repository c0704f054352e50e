use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::error_operator::operator_norm;
use super::fidelity::fidelity_point;
use crate::error::{Error, Result};
use crate::model::{assemble, encode_logical_state, ModelConfig, ModelInstance};
use crate::operator::{pauli_sum_to_operator, HermitianOperator};
use crate::pauli::QubitRegister;
use crate::propagate::{diagonalize, InstancePropagator, PreparedPair, PropagatorSettings, SpectralForm};
use crate::state::StateVector;

/// Accepted band for the fitted decay exponent of the theorem-limit check.
pub const EXPONENT_BAND: (f64, f64) = (-1.2, -0.8);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub e_penalty: f64,
    /// `|(U(T) - U_0(T)) P|`
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremLimitReport {
    pub t: f64,
    pub points: Vec<LimitPoint>,
    /// Slope of `log deviation` against `log |E_P|`; absent when a deviation is zero.
    pub exponent: Option<f64>,
    pub fit_r_squared: Option<f64>,
    /// Deviation strictly decreasing along the list.
    pub monotone: bool,
    pub exponent_in_band: bool,
}

/// Least-squares line `y = a + b x`; returns `(a, b, R^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some((a, b, r2))
}

/// Encoded logical basis states as columns of a system-block matrix.
fn code_basis(inst: &ModelInstance) -> Result<Mat<Complex64>> {
    let k = 1usize << inst.fam.n_logical;
    let states: Vec<StateVector> = (0..k)
        .map(|a| encode_logical_state(&inst.code, StateVector::basis(k, a).amplitudes()))
        .collect::<Result<_>>()?;
    Ok(Mat::from_fn(inst.reg.system_dim(), k, |s, a| states[a].amplitudes()[s]))
}

fn evolve_dense(sf: &SpectralForm, t: f64) -> Mat<Complex64> {
    let u = sf.eigenvectors();
    let e = sf.eigenvalues();
    let ue = Mat::<Complex64>::from_fn(u.nrows(), u.ncols(), |i, k| u[(i, k)] * Complex64::from_polar(1.0, -e[k] * t));
    &ue * u.adjoint()
}

/// `U(T) B` for `B` the codespace basis `|c_a> ⊗ |e'>`, exploiting the
/// product structure of `B` in `U† B`.
fn full_on_codespace(sf: &SpectralForm, basis: &Mat<Complex64>, ed: usize, t: f64) -> Mat<Complex64> {
    let u = sf.eigenvectors();
    let (sd, ka) = (basis.nrows(), basis.ncols());
    let n = u.nrows();
    let phases: Vec<Complex64> = sf.eigenvalues().iter().map(|e| Complex64::from_polar(1.0, -e * t)).collect();
    let coeff = Mat::<Complex64>::from_fn(n, ka * ed, |k, col| {
        let (a, e) = (col / ed, col % ed);
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..sd {
            acc += u[(s * ed + e, k)].conj() * basis[(s, a)];
        }
        acc * phases[k]
    });
    u * &coeff
}

/// `|(U(T) - U_0(T)) P|` for each `E_P`, with the power-law decay fitted in
/// log-log coordinates. `e_penalties` must be nonzero and ascending in magnitude.
pub fn theorem_limit_check(config: &ModelConfig, t: f64, e_penalties: &[f64]) -> Result<TheoremLimitReport> {
    if e_penalties.is_empty() {
        return Err(Error::validation("theorem limit check needs at least one E_P"));
    }
    if e_penalties.iter().any(|e| !e.is_finite() || *e == 0.0) {
        return Err(Error::validation("E_P values must be finite and nonzero"));
    }
    if e_penalties.windows(2).any(|w| w[1].abs() <= w[0].abs()) {
        return Err(Error::validation("E_P values must be strictly ascending in magnitude"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::validation("T must be finite and nonnegative"));
    }
    let mut cfg = config.clone();
    cfg.e_penalty = e_penalties[0];
    let base = assemble(&cfg)?;
    if !base.is_time_independent() {
        return Err(Error::contract("theorem limit check needs a time-independent schedule"));
    }
    let ed = base.reg.env_dim();
    let basis = code_basis(&base)?;
    let sys = diagonalize(&base.h0_system_at(0.0)?)?;
    let env = diagonalize(base.h_env())?;
    let us_b = evolve_dense(&sys, t) * &basis;
    let ue = evolve_dense(&env, t);
    let ka = basis.ncols();
    let free = Mat::<Complex64>::from_fn(base.dim(), ka * ed, |row, col| {
        us_b[(row / ed, col / ed)] * ue[(row % ed, col % ed)]
    });

    let mut points = Vec::with_capacity(e_penalties.len());
    for &ep in e_penalties {
        let inst = if ep == base.e_penalty { base.clone() } else { base.with_couplings(base.lambda, ep)? };
        let sf = diagonalize(&inst.hamiltonian_at(0.0)?)?;
        let ub = full_on_codespace(&sf, &basis, ed, t);
        let diff = &ub - &free;
        points.push(LimitPoint {
            e_penalty: ep,
            deviation: operator_norm(&diff)?,
        });
        log::info!("theorem limit: E_P = {ep}, deviation = {:e}", points.last().unwrap().deviation);
    }
    let monotone = points.windows(2).all(|w| w[1].deviation < w[0].deviation);
    if !monotone {
        log::warn!("deviation is not monotone in |E_P|; check for resonances");
    }
    let fit = if points.iter().all(|p| p.deviation > 0.0) {
        let x: Vec<f64> = points.iter().map(|p| p.e_penalty.abs().ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.deviation.ln()).collect();
        linear_fit(&x, &y)
    } else {
        None
    };
    let exponent = fit.map(|f| f.1);
    Ok(TheoremLimitReport {
        t,
        exponent,
        fit_r_squared: fit.map(|f| f.2),
        monotone,
        exponent_in_band: exponent.is_some_and(|b| (EXPONENT_BAND.0..=EXPONENT_BAND.1).contains(&b)),
        points,
    })
}

/// Coarse-scan and refinement settings for [`protection_time`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    pub t_start: f64,
    pub factor: f64,
    pub t_max: f64,
    /// Consecutive scan points that must all lie below the threshold.
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            factor: 1.3,
            t_max: 1e12,
            window: 5,
            rel_tol: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectionTime {
    /// `None` when `F_s^2` stays above the threshold up to `t_max`.
    pub t_prot: Option<f64>,
    /// The threshold was already crossed at the first scan point.
    pub floor: bool,
    pub evaluations: usize,
}

/// First time `F_s^2` drops below `threshold`: geometric scan, a crossing
/// counting only when `window` consecutive points lie below, then bisection.
pub fn protection_time_prepared(
    pair: &PreparedPair<'_>,
    p_sys: &HermitianOperator,
    threshold: f64,
    opts: &ScanOptions,
) -> Result<ProtectionTime> {
    if !(opts.t_start > 0.0 && opts.factor > 1.0 && opts.t_max >= opts.t_start && opts.window >= 1) {
        return Err(Error::validation("invalid protection-time scan options"));
    }
    let mut evaluations = 0;
    let mut fs = |t: f64| -> Result<f64> {
        evaluations += 1;
        let (phi, s, e) = pair.at(t)?;
        Ok(fidelity_point(t, &phi, &s, &e, p_sys)?.system_sq)
    };
    let mut grid = vec![opts.t_start];
    while let Some(&last) = grid.last() {
        let next = last * opts.factor;
        if next > opts.t_max {
            break;
        }
        grid.push(next);
    }
    let mut below = Vec::with_capacity(grid.len());
    let mut hit = None;
    for (k, &t) in grid.iter().enumerate() {
        below.push(fs(t)? < threshold);
        if k + 1 >= opts.window || k + 1 == grid.len() {
            let start = (k + 1).saturating_sub(opts.window);
            if below[start..].iter().all(|&b| b) {
                hit = Some(start);
                break;
            }
        }
    }
    let Some(k) = hit else {
        return Ok(ProtectionTime {
            t_prot: None,
            floor: false,
            evaluations,
        });
    };
    let (mut lo, mut hi) = if k == 0 { (0.0, grid[0]) } else { (grid[k - 1], grid[k]) };
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if fs(mid)? < threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ProtectionTime {
        t_prot: Some(0.5 * (lo + hi)),
        floor: k == 0,
        evaluations,
    })
}

/// [`protection_time_prepared`] from the instance's own initial state.
pub fn protection_time(inst: &ModelInstance, threshold: f64, opts: &ScanOptions) -> Result<ProtectionTime> {
    if !inst.is_time_independent() {
        return Err(Error::contract("protection time needs a time-independent schedule"));
    }
    let prop = InstancePropagator::new(inst, PropagatorSettings::default())?;
    let pair = prop.prepare(&inst.psi_system, &inst.psi_env)?;
    protection_time_prepared(&pair, &inst.fam.total_p_system, threshold, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongTermFidelity {
    /// `|<+_L|psi^s>|^2`
    pub alpha_sq: f64,
    /// `|alpha|^4 + (1 - |alpha|^2)^2`
    pub predicted: f64,
    /// Mean of `F_s^2` over the sample times.
    pub measured: f64,
    pub samples: Vec<f64>,
}

/// `|alpha|^4 + (1 - |alpha|^2)^2`
pub fn dephasing_prediction(alpha_sq: f64) -> f64 {
    alpha_sq * alpha_sq + (1.0 - alpha_sq).powi(2)
}

/// Long-time average of `F_s^2` against the energy-basis dephasing
/// prediction, for one logical qubit.
pub fn longterm_fidelity_prepared(
    pair: &PreparedPair<'_>,
    inst: &ModelInstance,
    psi_system: &StateVector,
    times: &[f64],
) -> Result<LongTermFidelity> {
    if inst.fam.n_logical != 1 {
        return Err(Error::contract("long-term fidelity prediction is defined for one logical qubit"));
    }
    if times.is_empty() {
        return Err(Error::validation("long-term fidelity needs sample times"));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = encode_logical_state(&inst.code, &[Complex64::new(h, 0.0), Complex64::new(h, 0.0)])?;
    let alpha_sq = plus.inner(psi_system)?.norm_sqr();
    let samples: Vec<f64> = times
        .iter()
        .map(|&t| {
            let (phi, s, e) = pair.at(t)?;
            Ok(fidelity_point(t, &phi, &s, &e, &inst.fam.total_p_system)?.system_sq)
        })
        .collect::<Result<_>>()?;
    Ok(LongTermFidelity {
        alpha_sq,
        predicted: dephasing_prediction(alpha_sq),
        measured: samples.iter().sum::<f64>() / samples.len() as f64,
        samples,
    })
}

pub fn longterm_fidelity(inst: &ModelInstance, times: &[f64]) -> Result<LongTermFidelity> {
    let prop = InstancePropagator::new(inst, PropagatorSettings::default())?;
    let pair = prop.prepare(&inst.psi_system, &inst.psi_env)?;
    longterm_fidelity_prepared(&pair, inst, &inst.psi_system, times)
}

/// Encoded ground state of the logical Hamiltonian at time `t`, with the
/// gap to the next logical level.
pub fn codespace_ground_state(inst: &ModelInstance, t: f64) -> Result<(StateVector, f64)> {
    let n = inst.fam.n_logical;
    let reg = QubitRegister::system_only(n)?;
    let h = pauli_sum_to_operator(&inst.schedule.logical_at(t), &reg, true)?;
    let eig = h
        .to_dense()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let gap = if h.dim() > 1 { s[1].re - s[0].re } else { f64::INFINITY };
    let u = eig.U();
    let coeffs: Vec<Complex64> = (0..h.dim()).map(|i| u[(i, 0)]).collect();
    Ok((encode_logical_state(&inst.code, &coeffs)?, gap))
}
