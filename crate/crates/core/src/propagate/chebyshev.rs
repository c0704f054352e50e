//! Stepped propagation with a Chebyshev expansion per step.
//!
//! On a step of length `dt` the Hamiltonian is frozen at the step midpoint
//! and `exp(-i H dt) x` is expanded as
//! `e^{-i c dt} sum_k (2 - delta_k0) (-i)^k J_k(r dt) T_k((H - c) / r) x`,
//! where `[c - r, c + r]` encloses the spectrum. The degree is the first
//! order past `r dt` at which the Bessel coefficients drop below
//! [`COEFF_CUTOFF`].

use num_complex::Complex64;
use serde::Serialize;

use super::{PropagatorSettings, TimeDependentHamiltonian};
use crate::error::{Error, Result};
use crate::state::StateVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bessel coefficients below this are dropped from the expansion.
pub const COEFF_CUTOFF: f64 = 1e-17;

/// Smallest step before the propagator gives up.
pub const MIN_STEP: f64 = 1e-12;

const GROWTH: f64 = 1.5;

/// `J_0(x) .. J_kmax(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x < 1e-20 {
        // Leading series term; the recurrence below would overflow.
        let mut term = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                term *= 0.5 * x / k as f64;
            }
            *o = term;
        }
        return out;
    }
    let top = (kmax as f64).max(x);
    let start = (top + 20.0 + (160.0 * top).sqrt()).ceil() as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// Expansion coefficients `(2 - delta_k0) (-i)^k J_k(z)` truncated at the
/// first order past `z` where two successive Bessel values fall below the
/// cutoff. `None` when that needs more than `max_order` terms.
fn expansion_coefficients(z: f64, max_order: usize) -> Option<Vec<Complex64>> {
    let j = bessel_j_sequence(z, max_order + 1);
    let first = z.ceil() as usize;
    let degree = (first.max(1)..=max_order)
        .find(|&k| j[k].abs() < COEFF_CUTOFF && j[k + 1].abs() < COEFF_CUTOFF)?;
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    Some(
        (0..degree)
            .map(|k| {
                let w = if k == 0 { 1.0 } else { 2.0 };
                phases[k % 4] * (w * j[k])
            })
            .collect(),
    )
}

/// Largest `r dt` that comfortably fits in `order` terms.
fn z_cap(order: usize) -> f64 {
    let o = order as f64;
    (o - 10.0 * o.cbrt() - 20.0).max(1.0)
}

/// One step `out = exp(-i H(t_mid) dt) x` with spectrum in `interval`.
/// Returns the number of matrix-vector products used.
pub fn chebyshev_step<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    t_mid: f64,
    dt: f64,
    interval: (f64, f64),
    max_order: usize,
    x: &[Complex64],
    out: &mut [Complex64],
) -> Result<usize> {
    let n = x.len();
    let c = 0.5 * (interval.0 + interval.1);
    let r = (0.5 * (interval.1 - interval.0)).max(1e-300);
    let r = r * (1.0 + 1e-12) + 1e-300;
    let coeffs = expansion_coefficients(r * dt, max_order).ok_or_else(|| {
        Error::numerical(format!(
            "Chebyshev expansion needs more than {max_order} terms for r dt = {}",
            r * dt
        ))
    })?;
    let mut t_prev = x.to_vec();
    let mut t_cur = vec![ZERO; n];
    let mut t_next = vec![ZERO; n];
    let apply_scaled = |src: &[Complex64], dst: &mut [Complex64]| {
        h.apply_at(t_mid, src, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d - c * s) / r;
        }
    };
    for (o, xi) in out.iter_mut().zip(x) {
        *o = coeffs[0] * xi;
    }
    let mut matvecs = 0;
    if coeffs.len() > 1 {
        apply_scaled(&t_prev, &mut t_cur);
        matvecs += 1;
        for (o, v) in out.iter_mut().zip(&t_cur) {
            *o += coeffs[1] * v;
        }
        for &a in &coeffs[2..] {
            apply_scaled(&t_cur, &mut t_next);
            matvecs += 1;
            for i in 0..n {
                t_next[i] = 2.0 * t_next[i] - t_prev[i];
                out[i] += a * t_next[i];
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
    }
    let phase = Complex64::from_polar(1.0, -c * dt);
    for o in out.iter_mut() {
        *o *= phase;
    }
    Ok(matvecs)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub matvecs: usize,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Squared norm of the part of `b` orthogonal to `a`, relative to `|b|^2`.
/// Equals the overlap deficit of the normalized pair without cancellation.
fn perpendicular_deficit(a: &[Complex64], b: &[Complex64]) -> f64 {
    let aa: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let bb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    let ab: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let proj = ab / aa;
    let perp: f64 = a.iter().zip(b).map(|(x, y)| (y - proj * x).norm_sqr()).sum();
    perp / bb
}

/// States at each of `times` (ascending, all `>= t0`) starting from `s` at `t0`.
pub fn evolve_stepped_series<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    s: &StateVector,
    t0: f64,
    times: &[f64],
    settings: &PropagatorSettings,
) -> Result<(Vec<StateVector>, StepStats)> {
    settings.validate()?;
    if s.dim() != h.dim() {
        return Err(Error::contract("state and Hamiltonian differ in dimension"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::contract("output times must be ascending and not before t0"));
    }
    let norm0 = s.norm();
    let order = settings.substep_expansion_order;
    let mut stats = StepStats {
        min_dt: f64::INFINITY,
        ..StepStats::default()
    };
    let mut t = t0;
    let mut x = s.amplitudes().to_vec();
    let n = x.len();
    let mut coarse = vec![ZERO; n];
    let mut half = vec![ZERO; n];
    let mut fine = vec![ZERO; n];
    let mut dt = settings.dt_max;
    let mut out = Vec::with_capacity(times.len());

    for &target in times {
        while t < target {
            let mut dt_try = dt.min(target - t);
            let interval = h.spectral_interval(t, t + dt_try);
            let r = 0.5 * (interval.1 - interval.0);
            if r > 0.0 {
                dt_try = dt_try.min(z_cap(order) / r);
            }
            let step_end = if dt_try >= target - t { target } else { t + dt_try };
            let dt_step = step_end - t;
            if dt_step < MIN_STEP && step_end != target {
                let local = interval.0.abs().max(interval.1.abs());
                return Err(Error::numerical(format!(
                    "step size underflow at t = {t}: dt = {dt_step:e}, local |H| <= {local:e}"
                )));
            }
            let accepted = if h.is_constant() {
                stats.matvecs += chebyshev_step(h, t + 0.5 * dt_step, dt_step, interval, order, &x, &mut fine)?;
                true
            } else {
                stats.matvecs += chebyshev_step(h, t + 0.5 * dt_step, dt_step, interval, order, &x, &mut coarse)?;
                stats.matvecs +=
                    chebyshev_step(h, t + 0.25 * dt_step, 0.5 * dt_step, interval, order, &x, &mut half)?;
                stats.matvecs +=
                    chebyshev_step(h, t + 0.75 * dt_step, 0.5 * dt_step, interval, order, &half, &mut fine)?;
                perpendicular_deficit(&coarse, &fine) <= settings.refinement_tol * dt_step
            };
            if accepted {
                std::mem::swap(&mut x, &mut fine);
                t = step_end;
                stats.accepted += 1;
                stats.min_dt = stats.min_dt.min(dt_step);
                stats.max_dt = stats.max_dt.max(dt_step);
                if dt_step >= dt * (1.0 - 1e-12) {
                    dt = (dt * GROWTH).min(settings.dt_max);
                }
                let norm: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                if !((norm - norm0).abs() <= settings.unitarity_tol * norm0.max(1.0)) {
                    return Err(Error::numerical(format!(
                        "norm drift {:e} at t = {t} exceeds unitarity_tol",
                        norm - norm0
                    )));
                }
            } else {
                stats.rejected += 1;
                dt = 0.5 * dt_step;
                if dt < MIN_STEP {
                    let local = interval.0.abs().max(interval.1.abs());
                    return Err(Error::numerical(format!(
                        "step size underflow at t = {t}: dt = {dt:e}, local |H| <= {local:e}"
                    )));
                }
            }
        }
        out.push(StateVector::from_amplitudes(x.clone()));
    }
    if stats.accepted == 0 {
        stats.min_dt = 0.0;
    }
    Ok((out, stats))
}

/// `U(t1, t0) s` for a schedule-evaluable Hamiltonian.
pub fn evolve_stepped<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    s: &StateVector,
    t0: f64,
    t1: f64,
    settings: &PropagatorSettings,
) -> Result<StateVector> {
    if t1 < t0 {
        return Err(Error::contract("evolve_stepped needs t1 >= t0"));
    }
    let (mut states, _) = evolve_stepped_series(h, s, t0, &[t1], settings)?;
    Ok(states.pop().expect("one output time"))
}
