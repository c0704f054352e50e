//! Sparse operators on a qubit register.
//!
//! Storage is compressed sparse rows of complex doubles. The Hamiltonians
//! built here have `O(n_total * 2^n_total)` nonzeros, so dense storage is
//! reserved for explicit eigendecompositions.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, QubitRegister};
use crate::state::StateVector;

/// Entrywise tolerance for the conjugate-transpose check.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Dimension up to which `spectral_norm` may fall back to a dense eigensolve.
pub const DENSE_NORM_FALLBACK_DIM: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse square operator with a verified hermiticity flag.
///
/// When the flag is set the entries equal their conjugate transpose within
/// [`HERMITICITY_TOL`] (scaled by the largest entry once that exceeds one).
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    matrix: CsMat<Complex64>,
    hermitian: bool,
}

impl HermitianOperator {
    /// Wrap a CSR matrix, verifying hermiticity if `hermitian` is asserted.
    pub fn from_csr(matrix: CsMat<Complex64>, hermitian: bool) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::contract(format!(
                "operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let matrix = if matrix.is_csr() { matrix } else { matrix.to_csr() };
        let op = Self { matrix, hermitian };
        if hermitian {
            let res = op.hermiticity_residual();
            let scale = op.max_abs().max(1.0);
            if !(res <= HERMITICITY_TOL * scale) {
                return Err(Error::numerical(format!(
                    "operator asserted Hermitian but |A - A^H|_max = {res:e}"
                )));
            }
        }
        Ok(op)
    }

    fn unchecked(matrix: CsMat<Complex64>, hermitian: bool) -> Self {
        Self { matrix, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        Self::unchecked(CsMat::eye(dim), true)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::unchecked(CsMat::zero((dim, dim)), true)
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let mut tri = TriMat::new((dim, dim));
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::contract(format!(
                    "triplet ({r}, {c}) outside a {dim}-dimensional operator"
                )));
            }
            tri.add_triplet(r, c, v);
        }
        Self::from_csr(tri.to_csr(), hermitian)
    }

    /// Dense to sparse, dropping entries with magnitude `<= drop_tol`.
    pub fn from_dense(m: &Mat<Complex64>, hermitian: bool, drop_tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::contract("dense operator must be square"));
        }
        let n = m.nrows();
        let mut tri = TriMat::new((n, n));
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v.norm() > drop_tol {
                    tri.add_triplet(i, j, v);
                }
            }
        }
        Self::from_csr(tri.to_csr(), hermitian)
    }

    /// `|a><a| + |b><b| + ...` for the given vectors.
    pub fn projector_onto(vectors: &[&StateVector]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.dim())
            .ok_or_else(|| Error::contract("projector needs at least one vector"))?;
        let mut trip = Vec::new();
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::contract("projector vectors differ in dimension"));
            }
            let nz: Vec<(usize, Complex64)> = v
                .amplitudes()
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .collect();
            for &(i, a) in &nz {
                for &(j, b) in &nz {
                    trip.push((i, j, a * b.conj()));
                }
            }
        }
        Self::from_triplets(dim, trip, true)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &CsMat<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix.get(row, col).copied().unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.data().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let t = self.matrix.transpose_view().to_csr();
        Self::unchecked(t.map(|v| v.conj()), self.hermitian)
    }

    /// `max |A - A^H|` over entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let adj = self.matrix.transpose_view().to_csr().map(|v| v.conj());
        let diff = &self.matrix - &adj;
        diff.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &HermitianOperator, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::contract(format!(
                "{what}: dimension mismatch {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other, "add")?;
        Ok(Self::unchecked(
            &self.matrix + &other.matrix,
            self.hermitian && other.hermitian,
        ))
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other, "sub")?;
        Ok(Self::unchecked(
            &self.matrix - &other.matrix,
            self.hermitian && other.hermitian,
        ))
    }

    /// Real scaling keeps the hermiticity flag.
    pub fn scale(&self, c: f64) -> Self {
        Self::unchecked(self.matrix.map(|v| v * c), self.hermitian)
    }

    /// Complex scaling; the flag survives only for real `c`.
    pub fn scale_complex(&self, c: Complex64) -> Self {
        Self::unchecked(self.matrix.map(|v| v * c), self.hermitian && c.im == 0.0)
    }

    /// Operator product `self * other`. The flag is cleared: products of
    /// Hermitian operators are not Hermitian in general.
    pub fn mul(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other, "mul")?;
        Ok(Self::unchecked(&self.matrix * &other.matrix, false))
    }

    /// Re-assert hermiticity after an algebraic manipulation known to
    /// preserve it (e.g. `P A P`); verified.
    pub fn assert_hermitian(self) -> Result<Self> {
        Self::from_csr(self.matrix, true)
    }

    /// `self ⊗ other`; `self` acts on the high-order qubits.
    pub fn kron(&self, other: &HermitianOperator) -> Self {
        let k = sprs::kronecker_product(self.matrix.view(), other.matrix.view());
        let k = if k.is_csr() { k } else { k.to_csr() };
        Self::unchecked(k, self.hermitian && other.hermitian)
    }

    /// `I_left ⊗ self ⊗ I_right`.
    pub fn embed(&self, left_dim: usize, right_dim: usize) -> Self {
        let mut out = self.clone();
        if left_dim > 1 {
            out = Self::identity(left_dim).kron(&out);
        }
        if right_dim > 1 {
            out = out.kron(&Self::identity(right_dim));
        }
        out
    }

    /// Drop stored entries with magnitude `<= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let n = self.dim();
        let mut tri = TriMat::new((n, n));
        for (v, (r, c)) in self.matrix.iter() {
            if v.norm() > tol {
                tri.add_triplet(r, c, *v);
            }
        }
        Self::unchecked(tri.to_csr(), self.hermitian)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.dim();
        let mut m = Mat::<Complex64>::zeros(n, n);
        for (v, (r, c)) in self.matrix.iter() {
            m[(r, c)] += *v;
        }
        m
    }

    /// `y = A x` on raw slices.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        let indptr = self.matrix.indptr();
        let indptr = indptr.raw_storage();
        let indices = self.matrix.indices();
        let data = self.matrix.data();
        let base = indptr[0];
        for (row, out) in y.iter_mut().enumerate() {
            let (s, e) = (indptr[row] - base, indptr[row + 1] - base);
            let mut acc = ZERO;
            for k in s..e {
                acc += data[k] * x[indices[k]];
            }
            *out = acc;
        }
    }

    /// `y += c * A x`
    pub fn matvec_acc(&self, c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let indptr = self.matrix.indptr();
        let indptr = indptr.raw_storage();
        let indices = self.matrix.indices();
        let data = self.matrix.data();
        let base = indptr[0];
        for (row, out) in y.iter_mut().enumerate() {
            let (s, e) = (indptr[row] - base, indptr[row + 1] - base);
            let mut acc = ZERO;
            for k in s..e {
                acc += data[k] * x[indices[k]];
            }
            *out += c * acc;
        }
    }

    /// Matrix-vector product; no normalization.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        if s.dim() != self.dim() {
            return Err(Error::contract(format!(
                "apply: operator dimension {} vs state dimension {}",
                self.dim(),
                s.dim()
            )));
        }
        let mut out = StateVector::zeros(self.dim());
        self.matvec_into(s.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// `A X` for a dense block of columns.
    pub fn apply_columns(&self, x: &Mat<Complex64>) -> Result<Mat<Complex64>> {
        if x.nrows() != self.dim() {
            return Err(Error::contract("apply_columns: row count mismatch"));
        }
        let mut out = Mat::<Complex64>::zeros(x.nrows(), x.ncols());
        let mut buf_in = vec![ZERO; x.nrows()];
        let mut buf_out = vec![ZERO; x.nrows()];
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                buf_in[i] = x[(i, j)];
            }
            self.matvec_into(&buf_in, &mut buf_out);
            for i in 0..x.nrows() {
                out[(i, j)] = buf_out[i];
            }
        }
        Ok(out)
    }

    /// `<a|A|b>`
    pub fn expectation(&self, a: &StateVector, b: &StateVector) -> Result<Complex64> {
        a.inner(&self.apply(b)?)
    }

    /// Gershgorin interval `[lo, hi]` containing the spectrum of a Hermitian operator.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (col, v) in vec.iter() {
                if col == row {
                    diag = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// Kronecker embedding of one Pauli string on `reg`.
///
/// With `hermitian` set the coefficient must be real.
pub fn pauli_to_operator(
    p: &PauliString,
    reg: &QubitRegister,
    hermitian: bool,
) -> Result<HermitianOperator> {
    pauli_sum_to_operator(&PauliSum::from_terms([p.clone()]), reg, hermitian)
}

/// Sum of Kronecker embeddings; duplicate entries are accumulated.
pub fn pauli_sum_to_operator(
    sum: &PauliSum,
    reg: &QubitRegister,
    hermitian: bool,
) -> Result<HermitianOperator> {
    let dim = reg.dim();
    if hermitian {
        if let Some(bad) = sum.terms().iter().find(|t| t.coefficient.im != 0.0) {
            return Err(Error::contract(format!(
                "non-real coefficient {} on a string asserted Hermitian",
                bad.coefficient
            )));
        }
    }
    let mut tri = TriMat::with_capacity((dim, dim), dim * sum.len().max(1));
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for term in sum.terms() {
        let (x, z, ny) = term.masks(reg)?;
        let c = term.coefficient * i_pow[(ny % 4) as usize];
        if c == ZERO {
            continue;
        }
        for col in 0..dim {
            let sign = if (col & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            tri.add_triplet(col ^ x, col, c * sign);
        }
    }
    let op = HermitianOperator::unchecked(tri.to_csr(), hermitian);
    if hermitian {
        op.assert_hermitian()
    } else {
        Ok(op)
    }
}

/// `ab - ba`. Anti-Hermitian for Hermitian inputs, so the flag is cleared.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    a.check_dim(b, "commutator")?;
    let ab = &a.matrix * &b.matrix;
    let ba = &b.matrix * &a.matrix;
    Ok(HermitianOperator::unchecked(&ab - &ba, false))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Trivial,
    PowerIteration { iterations: usize },
    DenseEigen,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
}

/// Largest singular value.
///
/// Power iteration on `A^H A` from a fixed-seed start vector; when it fails
/// to settle to a relative change below `1e-13` the dense eigensolve is used
/// for dimensions up to [`DENSE_NORM_FALLBACK_DIM`].
pub fn spectral_norm(a: &HermitianOperator) -> Result<NormEstimate> {
    spectral_norm_with(a, 50_000)
}

pub fn spectral_norm_with(a: &HermitianOperator, max_iter: usize) -> Result<NormEstimate> {
    let n = a.dim();
    if a.nnz() == 0 || a.max_abs() == 0.0 {
        return Ok(NormEstimate {
            value: 0.0,
            method: NormMethod::Trivial,
        });
    }
    if n <= 64 {
        return dense_norm(a);
    }
    let adj = a.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_a11);
    let mut x = StateVector::random(n, &mut rng).into_amplitudes();
    let mut y = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut theta_prev = 0.0;
    let mut settled = 0;
    for it in 1..=max_iter {
        a.matvec_into(&x, &mut y);
        let theta: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        adj.matvec_into(&y, &mut z);
        let zn = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if zn == 0.0 {
            return Ok(NormEstimate {
                value: 0.0,
                method: NormMethod::PowerIteration { iterations: it },
            });
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / zn;
        }
        if (theta - theta_prev).abs() <= 1e-13 * theta {
            settled += 1;
            if settled >= 3 {
                return Ok(NormEstimate {
                    value: theta.sqrt(),
                    method: NormMethod::PowerIteration { iterations: it },
                });
            }
        } else {
            settled = 0;
        }
        theta_prev = theta;
    }
    if n <= DENSE_NORM_FALLBACK_DIM {
        log::debug!("power iteration did not settle in {max_iter} steps; dense fallback");
        dense_norm(a)
    } else {
        Err(Error::numerical(format!(
            "spectral norm power iteration did not converge in {max_iter} iterations (dim {n})"
        )))
    }
}

fn dense_norm(a: &HermitianOperator) -> Result<NormEstimate> {
    let m = a.to_dense();
    let value = if a.is_hermitian() {
        let ev = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
        ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else {
        let g = m.adjoint() * &m;
        let ev = g
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
        ev.iter().fold(0.0f64, |acc, v| acc.max(*v)).max(0.0).sqrt()
    };
    Ok(NormEstimate {
        value,
        method: NormMethod::DenseEigen,
    })
}

/// `exp(i * theta * A)` for Hermitian `A` via a dense eigendecomposition.
/// Entries below `1e-15` in magnitude are dropped from the result.
pub fn exp_i_hermitian(a: &HermitianOperator, theta: f64) -> Result<HermitianOperator> {
    if !a.is_hermitian() {
        return Err(Error::contract("exp_i_hermitian needs a Hermitian operator"));
    }
    let m = a.to_dense();
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("dense eigensolve failed: {e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let n = a.dim();
    let phases: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, theta * s[k].re))
        .collect();
    let scaled = Mat::<Complex64>::from_fn(n, n, |i, k| u[(i, k)] * phases[k]);
    let out = &scaled * u.adjoint();
    let mut op = HermitianOperator::from_dense(&out, false, 1e-15)?;
    op.hermitian = false;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_x_on_single_qubit() {
        let reg = QubitRegister::system_only(1).unwrap();
        let x = pauli_to_operator(&PauliString::single(0, Pauli::X, 1.0), &reg, true).unwrap();
        let d = x.to_dense();
        assert_eq!(d[(0, 1)], c(1.0, 0.0));
        assert_eq!(d[(1, 0)], c(1.0, 0.0));
        assert_eq!(d[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn identity_string_gives_identity() {
        let reg = QubitRegister::new(2, 1).unwrap();
        let op = pauli_to_operator(&PauliString::identity(1.0), &reg, true).unwrap();
        let d = op.to_dense();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(d[(i, j)], c(if i == j { 1.0 } else { 0.0 }, 0.0));
            }
        }
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // Canonical vector: X on qubit 0 of 3 maps |000> to |100> = index 4.
        let reg = QubitRegister::system_only(3).unwrap();
        let x0 = pauli_to_operator(&PauliString::single(0, Pauli::X, 1.0), &reg, true).unwrap();
        let out = x0.apply(&StateVector::basis(8, 0)).unwrap();
        assert_eq!(out.amplitudes()[4], c(1.0, 0.0));
    }

    #[test]
    fn unknown_label_and_complex_coefficient_rejected() {
        let reg = QubitRegister::system_only(2).unwrap();
        assert!(pauli_to_operator(&PauliString::single(2, Pauli::Z, 1.0), &reg, true).is_err());
        let s = PauliString::single(0, Pauli::Z, c(0.0, 1.0));
        assert!(matches!(
            pauli_to_operator(&s, &reg, true),
            Err(Error::Contract(_))
        ));
        assert!(pauli_to_operator(&s, &reg, false).is_ok());
    }

    #[test]
    fn commutator_examples() {
        let reg = QubitRegister::system_only(1).unwrap();
        let x = pauli_to_operator(&PauliString::single(0, Pauli::X, 1.0), &reg, true).unwrap();
        let y = pauli_to_operator(&PauliString::single(0, Pauli::Y, 1.0), &reg, true).unwrap();
        let z = pauli_to_operator(&PauliString::single(0, Pauli::Z, 1.0), &reg, true).unwrap();
        assert_eq!(commutator(&x, &x).unwrap().max_abs(), 0.0);
        let xy = commutator(&x, &y).unwrap();
        assert!(!xy.is_hermitian());
        let diff = xy.sub(&z.scale_complex(c(0.0, 2.0))).unwrap();
        assert_eq!(diff.max_abs(), 0.0);
        let reg2 = QubitRegister::system_only(2).unwrap();
        let big = HermitianOperator::identity(reg2.dim());
        assert!(commutator(&x, &big).is_err());
    }

    #[test]
    fn norms_of_trivial_operators() {
        let reg = QubitRegister::system_only(8).unwrap();
        let s = PauliString::new(1.0, [(0, Pauli::X), (3, Pauli::Y), (7, Pauli::Z)]);
        let op = pauli_to_operator(&s, &reg, true).unwrap();
        let n = spectral_norm(&op).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12, "{n:?}");
        assert_eq!(spectral_norm(&HermitianOperator::zeros(256)).unwrap().value, 0.0);
    }

    #[test]
    fn asserted_hermitian_is_checked() {
        let trip = [(0, 1, c(1.0, 0.0)), (1, 0, c(2.0, 0.0))];
        assert!(HermitianOperator::from_triplets(2, trip, true).is_err());
        assert!(HermitianOperator::from_triplets(2, trip, false).is_ok());
    }

    #[test]
    fn gershgorin_contains_spectrum() {
        let reg = QubitRegister::system_only(2).unwrap();
        let sum = PauliSum::from_terms([
            PauliString::new(0.7, [(0, Pauli::X), (1, Pauli::X)]),
            PauliString::single(1, Pauli::Z, -0.3),
        ]);
        let op = pauli_sum_to_operator(&sum, &reg, true).unwrap();
        let (lo, hi) = op.gershgorin_bounds();
        let ev = op.to_dense().self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(ev.iter().all(|&e| e >= lo - 1e-12 && e <= hi + 1e-12));
    }
}
