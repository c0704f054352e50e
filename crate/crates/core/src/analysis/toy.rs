//! Three-level model: two codespace eigenstates `|+>`, `|->` at `±omega`
//! and one penalty state at `E_P`, coupled by `lambda_±`.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio `E_P / max(omega, lambda)` below which perturbative outputs are flagged.
pub const PERTURBATIVE_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModelParams {
    pub omega: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub e_penalty: f64,
}

impl ToyModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.omega, self.lambda_plus, self.lambda_minus, self.e_penalty];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("toy model parameters must be finite"));
        }
        if self.e_penalty == 0.0 || self.omega == 0.0 {
            return Err(Error::validation("toy model needs nonzero omega and E_P"));
        }
        Ok(())
    }

    /// `E_P >> omega, lambda_±` within [`PERTURBATIVE_RATIO`].
    pub fn perturbative(&self) -> bool {
        let scale = self.omega.abs().max(self.lambda_plus.abs()).max(self.lambda_minus.abs());
        self.e_penalty.abs() >= PERTURBATIVE_RATIO * scale
    }

    /// Basis order `|+>, |->, |penalty>`.
    pub fn hamiltonian(&self) -> Mat<Complex64> {
        let (w, lp, lm, ep) = (self.omega, self.lambda_plus, self.lambda_minus, self.e_penalty);
        let rows = [[w, 0.0, lp], [0.0, -w, lm], [lp, lm, ep]];
        Mat::from_fn(3, 3, |i, j| Complex64::new(rows[i][j], 0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModelReport {
    pub params: ToyModelParams,
    pub perturbative_valid: bool,
    /// `±omega - lambda_±^2 / E_P`
    pub e_plus: f64,
    pub e_minus: f64,
    /// Exact eigenvalues, ascending.
    pub exact: [f64; 3],
    /// Exact eigenvalues continuously connected to `±omega`.
    pub exact_plus: f64,
    pub exact_minus: f64,
    /// `(lambda_+ lambda_- / (omega E_P))^2`
    pub transition_ceiling: f64,
    /// Two-level estimate `4 g^2 / (4 g^2 + D^2)` with the second-order
    /// coupling `g` and shifted splitting `D`; includes the `omega / E_P`
    /// corrections the leading ceiling drops.
    pub transition_ceiling_refined: f64,
    /// `(lambda_+^2 - lambda_-^2) / E_P`
    pub phase_rate: f64,
}

fn eigen(params: &ToyModelParams) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let e = params
        .hamiltonian()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("3x3 eigensolve failed: {e:?}")))?;
    let s = e.S().column_vector();
    Ok(((0..3).map(|k| s[k].re).collect(), e.U().to_owned()))
}

pub fn toy_model(params: &ToyModelParams) -> Result<ToyModelReport> {
    params.validate()?;
    let (w, lp, lm, ep) = (params.omega, params.lambda_plus, params.lambda_minus, params.e_penalty);
    let (vals, vecs) = eigen(params)?;
    // Identify eigenvectors by their overlap with |+> and |->.
    let pick = |basis: usize| {
        (0..3)
            .max_by(|&a, &b| vecs[(basis, a)].norm().total_cmp(&vecs[(basis, b)].norm()))
            .expect("three eigenvectors")
    };
    let g = 0.5 * lp * lm * (1.0 / (w - ep) + 1.0 / (-w - ep));
    let d = 2.0 * w + lp * lp / (w - ep) - lm * lm / (-w - ep);
    let refined = if g == 0.0 { 0.0 } else { 4.0 * g * g / (4.0 * g * g + d * d) };
    Ok(ToyModelReport {
        params: *params,
        perturbative_valid: params.perturbative(),
        e_plus: w - lp * lp / ep,
        e_minus: -w - lm * lm / ep,
        exact: [vals[0], vals[1], vals[2]],
        exact_plus: vals[pick(0)],
        exact_minus: vals[pick(1)],
        transition_ceiling: (lp * lm / (w * ep)).powi(2),
        transition_ceiling_refined: refined,
        phase_rate: (lp * lp - lm * lm) / ep,
    })
}

/// `|<-| exp(-i H t) |+>|^2` at each time.
pub fn transition_probability(params: &ToyModelParams, times: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let (vals, u) = eigen(params)?;
    Ok(times
        .iter()
        .map(|&t| {
            (0..3)
                .map(|k| u[(1, k)] * Complex64::from_polar(1.0, -vals[k] * t) * u[(0, k)].conj())
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_levels() {
        let p = ToyModelParams {
            omega: 1.0,
            lambda_plus: 0.0,
            lambda_minus: 0.0,
            e_penalty: 50.0,
        };
        let r = toy_model(&p).unwrap();
        assert_eq!((r.e_plus, r.e_minus), (1.0, -1.0));
        assert_eq!(r.phase_rate, 0.0);
        assert_eq!(r.exact, [-1.0, 1.0, 50.0]);
        assert!(transition_probability(&p, &[0.0, 3.0]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shifted_plus_level() {
        let p = ToyModelParams {
            omega: 1.0,
            lambda_plus: 0.1,
            lambda_minus: 0.0,
            e_penalty: 100.0,
        };
        let r = toy_model(&p).unwrap();
        assert!((r.e_plus - 0.9999).abs() < 1e-15);
        assert!((r.exact_plus - r.e_plus).abs() < 1e-5);
        assert!(r.perturbative_valid);
    }

    #[test]
    fn doubling_penalty_halves_phase_rate() {
        let mut p = ToyModelParams {
            omega: 1.0,
            lambda_plus: 0.2,
            lambda_minus: 0.1,
            e_penalty: 50.0,
        };
        let a = toy_model(&p).unwrap().phase_rate;
        p.e_penalty = 100.0;
        let b = toy_model(&p).unwrap().phase_rate;
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn small_penalty_is_flagged() {
        let p = ToyModelParams {
            omega: 1.0,
            lambda_plus: 0.1,
            lambda_minus: 0.1,
            e_penalty: 5.0,
        };
        assert!(!toy_model(&p).unwrap().perturbative_valid);
    }
}
