use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::state::StateVector;

/// Largest dimension accepted by [`diagonalize`].
pub const DENSE_LIMIT: usize = 8192;

/// Bound on the relative reconstruction residual and on `|U^dag U - I|`.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Tolerance on norm drift during spectral evolution.
pub const UNITARITY_TOL: f64 = 1e-9;

/// `H = U diag(E) U^dag` with ascending `E`.
#[derive(Clone, Debug)]
pub struct SpectralForm {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<Complex64>,
    source_hash: String,
    /// Probe estimate of `|H - U E U^dag| / |H|` made at construction.
    pub reconstruction_estimate: f64,
    /// Probe estimate of `|U^dag U - I|` made at construction.
    pub unitarity_estimate: f64,
}

pub(crate) fn mat_vec(m: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let col = Mat::<Complex64>::from_fn(x.len(), 1, |i, _| x[i]);
    let y = m * &col;
    y.col_as_slice(0).to_vec()
}

/// `m^dag x`
pub(crate) fn adjoint_vec(m: MatRef<'_, Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let col = Mat::<Complex64>::from_fn(x.len(), 1, |i, _| x[i]);
    let y = m.adjoint() * &col;
    y.col_as_slice(0).to_vec()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Content hash of a sparse operator (structure and entry bits).
pub fn operator_hash(h: &HermitianOperator) -> String {
    let m = h.matrix();
    let mut hasher = Sha256::new();
    hasher.update((m.rows() as u64).to_le_bytes());
    for &p in m.indptr().raw_storage() {
        hasher.update((p as u64).to_le_bytes());
    }
    for &i in m.indices() {
        hasher.update((i as u64).to_le_bytes());
    }
    for v in m.data() {
        hasher.update(v.re.to_bits().to_le_bytes());
        hasher.update(v.im.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralForm> {
    diagonalize_with_limit(h, DENSE_LIMIT)
}

pub fn diagonalize_with_limit(h: &HermitianOperator, limit: usize) -> Result<SpectralForm> {
    if !h.is_hermitian() {
        return Err(Error::contract("diagonalize needs a Hermitian operator"));
    }
    let n = h.dim();
    if n > limit {
        return Err(Error::contract(format!(
            "dimension {n} exceeds the dense limit {limit}; use the stepped propagator"
        )));
    }
    if h.matrix().data().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::numerical("operator has non-finite entries"));
    }
    let (eigenvalues, eigenvectors) = {
        let dense = h.to_dense();
        let eig = dense
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let vals: Vec<f64> = (0..n).map(|k| s[k].re).collect();
        (vals, eig.U().to_owned())
    };
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::numerical("eigensolver returned unsorted eigenvalues"));
    }
    let mut form = SpectralForm {
        eigenvalues,
        eigenvectors,
        source_hash: operator_hash(h),
        reconstruction_estimate: 0.0,
        unitarity_estimate: 0.0,
    };
    let (recon, unit) = form.probe_check(h);
    form.reconstruction_estimate = recon;
    form.unitarity_estimate = unit;
    if !(recon <= SPECTRAL_TOL && unit <= SPECTRAL_TOL) {
        return Err(Error::numerical(format!(
            "eigendecomposition check failed: reconstruction {recon:e}, unitarity {unit:e}"
        )));
    }
    Ok(form)
}

impl SpectralForm {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, Complex64> {
        self.eigenvectors.as_ref()
    }

    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    pub fn spectral_radius(&self) -> f64 {
        let lo = self.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = self.eigenvalues.last().copied().unwrap_or(0.0);
        lo.abs().max(hi.abs())
    }

    /// Random-probe residuals: reconstruction relative to `max |E|`, and
    /// `|U^dag U x - x|` for a unit probe.
    fn probe_check(&self, h: &HermitianOperator) -> (f64, f64) {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5bec_7a1);
        let x = StateVector::random(n, &mut rng);
        let hx = h.apply(&x).expect("dimension checked");
        let c = adjoint_vec(self.eigenvectors.as_ref(), x.amplitudes());
        let ec: Vec<Complex64> = c.iter().zip(&self.eigenvalues).map(|(a, e)| a * e).collect();
        let rec = mat_vec(self.eigenvectors.as_ref(), &ec);
        let diff: Vec<Complex64> = rec.iter().zip(hx.amplitudes()).map(|(a, b)| a - b).collect();
        let scale = self.spectral_radius().max(f64::MIN_POSITIVE);
        let recon = norm(&diff) / scale;
        let back = mat_vec(self.eigenvectors.as_ref(), &c);
        let udiff: Vec<Complex64> = back.iter().zip(x.amplitudes()).map(|(a, b)| a - b).collect();
        (recon, norm(&udiff))
    }

    /// Dense residuals `(|H - U E U^dag|_F / max|E|, |U^dag U - I|_F)`.
    /// Both bound the corresponding spectral-norm quantities from above.
    pub fn full_check(&self, h: &HermitianOperator) -> Result<(f64, f64)> {
        if h.dim() != self.dim() {
            return Err(Error::contract("full_check: dimension mismatch"));
        }
        let n = self.dim();
        let u = self.eigenvectors.as_ref();
        let ue = Mat::<Complex64>::from_fn(n, n, |i, k| u[(i, k)] * self.eigenvalues[k]);
        let rec = &ue * u.adjoint();
        let dense = h.to_dense();
        let recon = (&rec - &dense).norm_l2() / self.spectral_radius().max(f64::MIN_POSITIVE);
        let gram = u.adjoint() * u;
        let unit = (&gram - Mat::<Complex64>::identity(n, n)).norm_l2();
        Ok((recon, unit))
    }

    /// `U^dag s`
    pub fn coefficients(&self, s: &StateVector) -> Result<Vec<Complex64>> {
        if s.dim() != self.dim() {
            return Err(Error::contract("spectral evolution: dimension mismatch"));
        }
        Ok(adjoint_vec(self.eigenvectors.as_ref(), s.amplitudes()))
    }

    /// `U exp(-i E t) U^dag s`; fails if the norm drifts by more than [`UNITARITY_TOL`].
    pub fn evolve(&self, s: &StateVector, t: f64) -> Result<StateVector> {
        self.evolver(s)?.at(t)
    }

    /// Cache `U^dag s` for repeated evaluation at many times.
    pub fn evolver(&self, s: &StateVector) -> Result<SpectralEvolver<'_>> {
        let c0 = self.coefficients(s)?;
        Ok(SpectralEvolver {
            form: self,
            c0,
            norm0: s.norm(),
        })
    }

    /// `U exp(-i E t) U^dag B` for a block of columns.
    pub fn propagate_columns(&self, b: MatRef<'_, Complex64>, t: f64) -> Result<Mat<Complex64>> {
        if b.nrows() != self.dim() {
            return Err(Error::contract("propagate_columns: row count mismatch"));
        }
        let u = self.eigenvectors.as_ref();
        let c = u.adjoint() * b;
        let phases: Vec<Complex64> =
            self.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, -e * t)).collect();
        let pc = Mat::<Complex64>::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * phases[i]);
        Ok(u * &pc)
    }
}

/// Evaluates `U(t) s` for a fixed `s` in `O(dim^2)` per time.
pub struct SpectralEvolver<'a> {
    form: &'a SpectralForm,
    c0: Vec<Complex64>,
    norm0: f64,
}

impl SpectralEvolver<'_> {
    pub fn at(&self, t: f64) -> Result<StateVector> {
        let ct: Vec<Complex64> = self
            .c0
            .iter()
            .zip(&self.form.eigenvalues)
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        let out = StateVector::from_amplitudes(mat_vec(self.form.eigenvectors.as_ref(), &ct));
        let drift = (out.norm() - self.norm0).abs();
        if drift > UNITARITY_TOL * self.norm0.max(1.0) {
            return Err(Error::numerical(format!(
                "spectral evolution changed the norm by {drift:e} at t = {t}"
            )));
        }
        Ok(out)
    }
}
