use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::pauli::QubitRegister;
use crate::state::StateVector;

/// Allowed deviation from unit norm for states entering a fidelity.
pub const NORM_TOL: f64 = 1e-9;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Diagnostics at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub t: f64,
    pub total_sq: f64,
    pub system_sq: f64,
    pub codespace_prob: f64,
}

fn require_unit(s: &StateVector, what: &str) -> Result<()> {
    let n = s.norm();
    if !((n - 1.0).abs() <= NORM_TOL) {
        return Err(Error::contract(format!("{what} is not normalized: norm = {n:.15}")));
    }
    Ok(())
}

/// `|<phi0|phi>|^2` for unit vectors.
pub fn total_fidelity_sq(phi0: &StateVector, phi: &StateVector) -> Result<f64> {
    require_unit(phi0, "reference state")?;
    require_unit(phi, "evolved state")?;
    Ok(phi0.inner(phi)?.norm_sqr())
}

/// Amplitudes viewed as a `system_dim x env_dim` matrix.
fn as_matrix(phi: &StateVector, sd: usize, ed: usize) -> Mat<Complex64> {
    let a = phi.amplitudes();
    Mat::from_fn(sd, ed, |s, e| a[s * ed + e])
}

/// `rho = tr_env |phi><phi|` on the system block of `reg`.
pub fn partial_trace_env(phi: &StateVector, reg: &QubitRegister) -> Result<Mat<Complex64>> {
    if phi.dim() != reg.dim() {
        return Err(Error::contract("partial trace: state does not match the register"));
    }
    require_unit(phi, "state")?;
    let m = as_matrix(phi, reg.system_dim(), reg.env_dim());
    Ok(&m * m.adjoint())
}

/// `<phi0_s| rho |phi0_s>`; rejects `rho` that is not Hermitian positive
/// semidefinite within [`PSD_TOL`].
pub fn system_fidelity_sq(phi0_s: &StateVector, rho: &Mat<Complex64>) -> Result<f64> {
    let n = rho.nrows();
    if rho.ncols() != n || phi0_s.dim() != n {
        return Err(Error::contract("system fidelity: dimension mismatch"));
    }
    require_unit(phi0_s, "reference system state")?;
    check_density(rho)?;
    Ok(quadratic_form(rho, phi0_s.amplitudes()))
}

fn quadratic_form(rho: &Mat<Complex64>, a: &[Complex64]) -> f64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[i].conj() * rho[(i, j)] * a[j];
        }
    }
    acc.re
}

/// Hermitian, PSD and unit trace within tolerance.
pub fn check_density(rho: &Mat<Complex64>) -> Result<()> {
    let n = rho.nrows();
    let mut herm: f64 = 0.0;
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..n {
        trace += rho[(i, i)];
        for j in 0..n {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if herm > 1e-12 {
        return Err(Error::contract(format!("density matrix is not Hermitian: residual {herm:e}")));
    }
    if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
        return Err(Error::contract(format!("density matrix has trace {trace}")));
    }
    let evs = rho
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("eigensolve failed: {e:?}")))?;
    if let Some(&min) = evs.first() {
        if min < -PSD_TOL {
            return Err(Error::contract(format!(
                "density matrix is not positive semidefinite: eigenvalue {min:e}"
            )));
        }
    }
    Ok(())
}

/// `<phi|P|phi>` with `P` on the full register.
pub fn codespace_probability(phi: &StateVector, p: &HermitianOperator) -> Result<f64> {
    require_unit(phi, "state")?;
    Ok(p.expectation(phi, phi)?.re)
}

/// `tr(P_s rho)` with `P_s` on the system block.
pub fn codespace_probability_rho(rho: &Mat<Complex64>, p_sys: &HermitianOperator) -> Result<f64> {
    if p_sys.dim() != rho.nrows() {
        return Err(Error::contract("codespace probability: dimension mismatch"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, (r, c)) in p_sys.matrix().iter() {
        acc += v * rho[(c, r)];
    }
    Ok(acc.re)
}

/// All diagnostics from `phi(t)` and the factors of `phi_0(t)`.
pub fn fidelity_point(
    t: f64,
    phi: &StateVector,
    phi0_s: &StateVector,
    phi0_e: &StateVector,
    p_sys: &HermitianOperator,
) -> Result<FidelityPoint> {
    let (sd, ed) = (phi0_s.dim(), phi0_e.dim());
    if phi.dim() != sd * ed {
        return Err(Error::contract("fidelity point: dimension mismatch"));
    }
    require_unit(phi, "evolved state")?;
    require_unit(phi0_s, "reference system state")?;
    require_unit(phi0_e, "reference environment state")?;
    let m = as_matrix(phi, sd, ed);
    let (a, b) = (phi0_s.amplitudes(), phi0_e.amplitudes());
    let mut overlap = Complex64::new(0.0, 0.0);
    for s in 0..sd {
        let mut row = Complex64::new(0.0, 0.0);
        for e in 0..ed {
            row += b[e].conj() * m[(s, e)];
        }
        overlap += a[s].conj() * row;
    }
    let rho = &m * m.adjoint();
    check_density(&rho)?;
    Ok(FidelityPoint {
        t,
        total_sq: overlap.norm_sqr(),
        system_sq: quadratic_form(&rho, a),
        codespace_prob: codespace_probability_rho(&rho, p_sys)?,
    })
}
