//! Time evolution.
//!
//! Time-independent Hamiltonians are diagonalized once ([`SpectralForm`]) and
//! evaluated at any time for `O(dim^2)`. Schedules go through the stepped
//! propagator in [`chebyshev`]: midpoint-frozen Hamiltonian per step,
//! Chebyshev expansion of the step exponential, step doubling for error
//! control. Neither method renormalizes; norm drift is an error.

pub mod chebyshev;
mod pair;
mod spectral;

pub use chebyshev::{bessel_j_sequence, chebyshev_step, evolve_stepped, evolve_stepped_series, StepStats};
pub use pair::{evolve_pair, InstancePropagator, PairTrajectory, PreparedPair, CODESPACE_TOL};
pub use spectral::{diagonalize, diagonalize_with_limit, operator_hash, SpectralEvolver, SpectralForm, DENSE_LIMIT, SPECTRAL_TOL};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScheduleKind;
use crate::operator::HermitianOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Stepped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSettings {
    pub method: Method,
    pub dt_max: f64,
    pub unitarity_tol: f64,
    /// Largest Chebyshev degree per step; steps shrink to respect it.
    pub substep_expansion_order: usize,
    /// Accepted overlap deficit between one step and two half steps, per unit time.
    pub refinement_tol: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            dt_max: 10.0,
            unitarity_tol: 1e-9,
            substep_expansion_order: 160,
            refinement_tol: 1e-8,
        }
    }
}

impl PropagatorSettings {
    pub fn stepped() -> Self {
        Self {
            method: Method::Stepped,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::validation("dt_max must be positive"));
        }
        if !(self.unitarity_tol >= 1e-12) {
            return Err(Error::validation("unitarity_tol must be at least 1e-12"));
        }
        if self.substep_expansion_order < 8 {
            return Err(Error::validation("substep_expansion_order must be at least 8"));
        }
        if !(self.refinement_tol > 0.0) {
            return Err(Error::validation("refinement_tol must be positive"));
        }
        Ok(())
    }
}

/// A Hermitian operator valued function of time, applied matrix-free.
pub trait TimeDependentHamiltonian: Sync {
    fn dim(&self) -> usize;

    /// `y = H(t) x`
    fn apply_at(&self, t: f64, x: &[Complex64], y: &mut [Complex64]);

    /// Interval containing the spectrum of `H(t)` for every `t` in `[t0, t1]`.
    fn spectral_interval(&self, t0: f64, t1: f64) -> (f64, f64);

    fn is_constant(&self) -> bool;
}

impl TimeDependentHamiltonian for HermitianOperator {
    fn dim(&self) -> usize {
        HermitianOperator::dim(self)
    }

    fn apply_at(&self, _t: f64, x: &[Complex64], y: &mut [Complex64]) {
        self.matvec_into(x, y);
    }

    fn spectral_interval(&self, _t0: f64, _t1: f64) -> (f64, f64) {
        self.gershgorin_bounds()
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// `H(t) = S + (1 - s) A + s B`, `s = t / T` clamped to `[0, 1]`; a constant
/// schedule has the single endpoint `A` merged into `S`.
#[derive(Clone, Debug)]
pub struct ScheduledOperator {
    static_op: HermitianOperator,
    endpoints: Vec<HermitianOperator>,
    kind: ScheduleKind,
    total_time: f64,
    static_interval: (f64, f64),
    endpoint_intervals: Vec<(f64, f64)>,
    merged_interval: (f64, f64),
}

impl ScheduledOperator {
    pub fn new(
        static_op: HermitianOperator,
        endpoints: Vec<HermitianOperator>,
        kind: ScheduleKind,
        total_time: f64,
    ) -> Result<Self> {
        let want = match kind {
            ScheduleKind::Constant => 1,
            ScheduleKind::LinearInterpolation => 2,
        };
        if endpoints.len() != want {
            return Err(Error::contract(format!("{kind:?} schedule needs {want} endpoint(s)")));
        }
        if endpoints.iter().any(|e| e.dim() != static_op.dim()) {
            return Err(Error::contract("schedule endpoints and static part differ in dimension"));
        }
        if kind == ScheduleKind::LinearInterpolation && !(total_time > 0.0) {
            return Err(Error::contract("linear schedule needs total_time > 0"));
        }
        let static_interval = static_op.gershgorin_bounds();
        let endpoint_intervals = endpoints.iter().map(|e| e.gershgorin_bounds()).collect();
        let mut op = Self {
            static_op,
            endpoints,
            kind,
            total_time,
            static_interval,
            endpoint_intervals,
            merged_interval: (0.0, 0.0),
        };
        if kind == ScheduleKind::Constant {
            let a = op.endpoints.remove(0);
            let ia = op.endpoint_intervals.remove(0);
            op.static_op = op.static_op.add(&a)?.pruned(0.0);
            op.merged_interval = ia;
            op.static_interval = intersect(
                (op.static_interval.0 + ia.0, op.static_interval.1 + ia.1),
                op.static_op.gershgorin_bounds(),
            );
        }
        Ok(op)
    }

    /// Replace the Gershgorin bound of the static part by a tighter one.
    /// For a constant schedule the endpoint's bound is added on top.
    pub fn with_static_interval(mut self, interval: (f64, f64)) -> Result<Self> {
        if !(interval.0 <= interval.1) {
            return Err(Error::contract("static interval must satisfy lo <= hi"));
        }
        let m = self.merged_interval;
        self.static_interval = intersect(
            (interval.0 + m.0, interval.1 + m.1),
            self.static_op.gershgorin_bounds(),
        );
        Ok(self)
    }

    pub fn weights(&self, t: f64) -> (f64, f64) {
        match self.kind {
            ScheduleKind::Constant => (0.0, 0.0),
            ScheduleKind::LinearInterpolation => {
                let s = (t / self.total_time).clamp(0.0, 1.0);
                (1.0 - s, s)
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<HermitianOperator> {
        let mut h = self.static_op.clone();
        if self.kind == ScheduleKind::LinearInterpolation {
            let (wa, wb) = self.weights(t);
            h = h.add(&self.endpoints[0].scale(wa))?.add(&self.endpoints[1].scale(wb))?;
        }
        Ok(h)
    }
}

/// Both arguments enclose the same spectrum, so their overlap does too.
fn intersect(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo <= hi {
        (lo, hi)
    } else {
        a
    }
}

impl TimeDependentHamiltonian for ScheduledOperator {
    fn dim(&self) -> usize {
        self.static_op.dim()
    }

    fn apply_at(&self, t: f64, x: &[Complex64], y: &mut [Complex64]) {
        self.static_op.matvec_into(x, y);
        if self.kind == ScheduleKind::LinearInterpolation {
            let (wa, wb) = self.weights(t);
            self.endpoints[0].matvec_acc(Complex64::new(wa, 0.0), x, y);
            self.endpoints[1].matvec_acc(Complex64::new(wb, 0.0), x, y);
        }
    }

    fn spectral_interval(&self, t0: f64, t1: f64) -> (f64, f64) {
        let (slo, shi) = self.static_interval;
        if self.kind == ScheduleKind::Constant {
            return (slo, shi);
        }
        let (a, b) = (self.endpoint_intervals[0], self.endpoint_intervals[1]);
        let at = |t: f64| {
            let (wa, wb) = self.weights(t);
            (wa * a.0 + wb * b.0, wa * a.1 + wb * b.1)
        };
        let (l0, h0) = at(t0);
        let (l1, h1) = at(t1);
        (slo + l0.min(l1), shi + h0.max(h1))
    }

    fn is_constant(&self) -> bool {
        self.kind == ScheduleKind::Constant
    }
}
