//! The modulated error operator `F(t) = ∫_0^t e^{i E_P τ} U_0†(τ) V U_0(τ) P dτ`
//! for time-independent `H_0`.
//!
//! In a joint eigenbasis of `H_0` and `P` every matrix element is
//! `<j|V|k> ∫_0^t e^{i (E_P + E_j - E_k) τ} dτ`, integrated in closed form.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelInstance;
use crate::operator::{commutator, spectral_norm, HermitianOperator};

/// Bound on `|[H, P]|` for the frame, and on the code rows of `F`.
pub const FRAME_TOL: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// `∫_0^t e^{i w τ} dτ = t e^{i w t / 2} sinc(w t / 2)`.
pub fn phase_integral(w: f64, t: f64) -> Complex64 {
    let x = 0.5 * w * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(t * sinc, x)
}

fn eig(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
    let s = e.S().column_vector();
    Ok(((0..m.nrows()).map(|k| s[k].re).collect(), e.U().to_owned()))
}

fn select_columns(m: &Mat<Complex64>, cols: &[usize]) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Eigenbasis of `H_sys ⊗ I + I ⊗ H_env` in which the system factor is
/// block diagonal with respect to `P_sys`.
#[derive(Clone, Debug)]
pub struct EigenFrame {
    sys_values: Vec<f64>,
    sys_vectors: Mat<Complex64>,
    code_count: usize,
    env_values: Vec<f64>,
    env_vectors: Mat<Complex64>,
}

impl EigenFrame {
    /// `h_env = None` means a trivial (one-dimensional) environment.
    pub fn new(h_sys: &HermitianOperator, p_sys: &HermitianOperator, h_env: Option<&HermitianOperator>) -> Result<Self> {
        if h_sys.dim() != p_sys.dim() {
            return Err(Error::contract("eigen frame: H and P differ in dimension"));
        }
        let comm = commutator(h_sys, p_sys)?.max_abs();
        if comm > FRAME_TOL {
            return Err(Error::contract(format!("H does not commute with P: |[H, P]| = {comm:e}")));
        }
        let (pvals, pvecs) = eig(&p_sys.to_dense())?;
        let code: Vec<usize> = (0..pvals.len()).filter(|&k| pvals[k] > 0.5).collect();
        let rest: Vec<usize> = (0..pvals.len()).filter(|&k| pvals[k] <= 0.5).collect();
        if pvals.iter().any(|&v| v.abs() > FRAME_TOL && (v - 1.0).abs() > FRAME_TOL) {
            return Err(Error::contract("P is not a projector"));
        }
        let h = h_sys.to_dense();
        let mut sys_values = Vec::with_capacity(pvals.len());
        let mut blocks = Vec::new();
        for cols in [&code, &rest] {
            let b = select_columns(&pvecs, cols);
            let hb = b.adjoint() * &h * &b;
            let (vals, vecs) = eig(&hb)?;
            sys_values.extend(vals);
            blocks.push(&b * &vecs);
        }
        let n = h_sys.dim();
        let k = code.len();
        let sys_vectors = Mat::from_fn(n, n, |i, j| if j < k { blocks[0][(i, j)] } else { blocks[1][(i, j - k)] });
        let (env_values, env_vectors) = match h_env {
            Some(e) => eig(&e.to_dense())?,
            None => (vec![0.0], Mat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0))),
        };
        Ok(Self {
            sys_values,
            sys_vectors,
            code_count: k,
            env_values,
            env_vectors,
        })
    }

    /// Frame for a time-independent instance.
    pub fn for_instance(inst: &ModelInstance) -> Result<Self> {
        if !inst.is_time_independent() {
            return Err(Error::contract(
                "the error operator is only evaluated for time-independent schedules",
            ));
        }
        Self::new(&inst.h0_system_at(0.0)?, &inst.fam.total_p_system, Some(inst.h_env()))
    }

    pub fn dim(&self) -> usize {
        self.sys_values.len() * self.env_values.len()
    }

    pub fn env_dim(&self) -> usize {
        self.env_values.len()
    }

    /// Number of frame vectors inside `P` (codespace dimension times `env_dim`).
    pub fn code_dim(&self) -> usize {
        self.code_count * self.env_dim()
    }

    /// `H_0` eigenvalue of frame vector `j`; code vectors come first.
    pub fn energy(&self, j: usize) -> f64 {
        let ed = self.env_dim();
        self.sys_values[j / ed] + self.env_values[j % ed]
    }

    pub fn in_code(&self, j: usize) -> bool {
        j < self.code_dim()
    }

    /// Frame matrix elements `<j|V|k>` for all `j` and code columns `k`.
    pub fn rotate(&self, v: &HermitianOperator) -> Result<Mat<Complex64>> {
        if v.dim() != self.dim() {
            return Err(Error::contract("eigen frame: operator dimension mismatch"));
        }
        let (sd, ed) = (self.sys_values.len(), self.env_dim());
        let kc = self.code_dim();
        let w = Mat::<Complex64>::from_fn(self.dim(), kc, |row, col| {
            self.sys_vectors[(row / ed, col / ed)] * self.env_vectors[(row % ed, col % ed)]
        });
        let y = v.apply_columns(&w)?;
        let ws_adj = self.sys_vectors.adjoint().to_owned();
        let we_conj = Mat::<Complex64>::from_fn(ed, ed, |i, j| self.env_vectors[(i, j)].conj());
        let mut out = Mat::<Complex64>::zeros(self.dim(), kc);
        for col in 0..kc {
            let m = Mat::<Complex64>::from_fn(sd, ed, |s, e| y[(s * ed + e, col)]);
            let r = &ws_adj * &m * &we_conj;
            for s in 0..sd {
                for e in 0..ed {
                    out[(s * ed + e, col)] = r[(s, e)];
                }
            }
        }
        Ok(out)
    }

    /// `F(t)` in the frame (all rows, code columns) from rotated `V`.
    pub fn error_operator(&self, v_frame: &Mat<Complex64>, e_penalty: f64, t: f64) -> Mat<Complex64> {
        let e: Vec<f64> = (0..self.dim()).map(|j| self.energy(j)).collect();
        Mat::from_fn(v_frame.nrows(), v_frame.ncols(), |j, k| {
            let vjk = v_frame[(j, k)];
            if vjk == C0 {
                C0
            } else {
                vjk * phase_integral(e_penalty + e[j] - e[k], t)
            }
        })
    }

    /// Frobenius norm of the code rows of `f`.
    pub fn code_rows_residual(&self, f: &Mat<Complex64>) -> f64 {
        let kc = self.code_dim();
        let mut acc = 0.0;
        for k in 0..f.ncols() {
            for j in 0..kc {
                acc += f[(j, k)].norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Largest singular value of a dense matrix, via `M† M`.
pub fn operator_norm(m: &Mat<Complex64>) -> Result<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(0.0);
    }
    let g = m.adjoint() * m;
    let ev = g
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
    Ok(ev.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorOperatorPoint {
    pub t: f64,
    pub norm: f64,
    /// `|P F(t)|_F`, zero up to rounding.
    pub pf_residual: f64,
}

/// `|F(t)|` for each `t` with a prepared frame and rotated coupling.
pub fn error_operator_norms(
    frame: &EigenFrame,
    v_frame: &Mat<Complex64>,
    e_penalty: f64,
    times: &[f64],
) -> Result<Vec<ErrorOperatorPoint>> {
    times
        .iter()
        .map(|&t| {
            let f = frame.error_operator(v_frame, e_penalty, t);
            let pf = frame.code_rows_residual(&f);
            if !(pf <= FRAME_TOL) {
                return Err(Error::contract(format!("P F(t) is not zero at t = {t}: {pf:e}")));
            }
            Ok(ErrorOperatorPoint {
                t,
                norm: operator_norm(&f)?,
                pf_residual: pf,
            })
        })
        .collect()
}

/// `|F(t)|` series for a time-independent instance.
pub fn compute_f(inst: &ModelInstance, times: &[f64]) -> Result<Vec<ErrorOperatorPoint>> {
    let frame = EigenFrame::for_instance(inst)?;
    let vf = frame.rotate(&inst.v)?;
    error_operator_norms(&frame, &vf, inst.e_penalty, times)
}

/// `|sum_{i != j} F_i† F_j|` at time `t`, with `F_i` built from the
/// per-block couplings.
pub fn cross_term_norm(frame: &EigenFrame, v_blocks: &[HermitianOperator], e_penalty: f64, t: f64) -> Result<f64> {
    let fs: Vec<Mat<Complex64>> = v_blocks
        .iter()
        .map(|v| Ok(frame.error_operator(&frame.rotate(v)?, e_penalty, t)))
        .collect::<Result<_>>()?;
    let kc = frame.code_dim();
    let mut acc = Mat::<Complex64>::zeros(kc, kc);
    for (i, a) in fs.iter().enumerate() {
        for (j, b) in fs.iter().enumerate() {
            if i != j {
                acc += a.adjoint() * b;
            }
        }
    }
    operator_norm(&acc)
}

/// Instance norms entering the operator bound on `|F(t)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n_logical: usize,
    /// `|V_i|` per logical block.
    pub v_norms: Vec<f64>,
    /// `|[V_i, H_0]|` per logical block.
    pub commutator_norms: Vec<f64>,
}

impl BoundInputs {
    pub fn for_instance(inst: &ModelInstance) -> Result<Self> {
        if !inst.is_time_independent() {
            return Err(Error::contract("the operator bound needs a time-independent schedule"));
        }
        let h0 = inst.h0_full_at(0.0)?;
        let mut v_norms = Vec::new();
        let mut commutator_norms = Vec::new();
        for v in &inst.v_blocks {
            v_norms.push(spectral_norm(v)?.value);
            commutator_norms.push(spectral_norm(&commutator(v, &h0)?)?.value);
        }
        Ok(Self {
            n_logical: inst.fam.n_logical,
            v_norms,
            commutator_norms,
        })
    }

    /// `sqrt(n) max_i (2 |V_i| + |[V_i, H_0]| t) / |E_P|`; infinite at `E_P = 0`.
    pub fn bound(&self, e_penalty: f64, t: f64) -> f64 {
        let worst = self
            .v_norms
            .iter()
            .zip(&self.commutator_norms)
            .map(|(v, c)| 2.0 * v + c * t)
            .fold(0.0, f64::max);
        if worst == 0.0 {
            return 0.0;
        }
        (self.n_logical as f64).sqrt() * worst / e_penalty.abs()
    }
}

pub fn bound_f(inst: &ModelInstance, t: f64) -> Result<f64> {
    Ok(BoundInputs::for_instance(inst)?.bound(inst.e_penalty, t))
}

/// Leading-order infidelity bound `lambda^2 |F|^2`.
pub fn fidelity_bound(lambda: f64, f_norm: f64) -> f64 {
    if lambda.abs() > 0.3 {
        log::warn!("lambda = {lambda} is outside the perturbative regime of the fidelity bound");
    }
    lambda * lambda * f_norm * f_norm
}

/// Largest `|F|` compatible with an infidelity target at leading order.
pub fn admissible_f_norm(lambda: f64, target_infidelity: f64) -> f64 {
    target_infidelity.sqrt() / lambda.abs()
}
