//! Error-detecting codes, codespace projectors and the penalty identities.
//!
//! A [`CodeSpec`] is data: two logical basis states and three logical
//! operators on an `ell`-qubit block. Every check here compares matrices, so
//! any code with the same shape can be dropped in.
//!
//! System layout: logical qubit `i` occupies system qubits
//! `i*ell .. (i+1)*ell`; the environment block (if any) follows the system.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{
    exp_i_hermitian, pauli_sum_to_operator, pauli_to_operator, spectral_norm, HermitianOperator,
};
use crate::pauli::{Pauli, PauliString, PauliSum, QubitRegister};
use crate::state::StateVector;

/// Residual below which a detection or identity check counts as exact.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Above this many logical qubits the `2^n` subset expansion of the `R_r`
/// family gets expensive; a warning is logged.
pub const R_FAMILY_WARN_LOGICAL: usize = 6;

#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub name: String,
    pub ell: usize,
    pub logical_zero: StateVector,
    pub logical_one: StateVector,
    pub logical_x: HermitianOperator,
    pub logical_y: HermitianOperator,
    pub logical_z: HermitianOperator,
    /// Largest error weight `k` with `P sigma P = 0` for all weight-`<= k` strings.
    pub detect_weight: usize,
}

impl CodeSpec {
    /// Assemble a code and check orthonormality, the logical action table and
    /// `[sigma_L, P] = 0`. Detection is checked separately by [`verify_detection`].
    pub fn new(
        name: impl Into<String>,
        ell: usize,
        logical_zero: StateVector,
        logical_one: StateVector,
        logical_x: HermitianOperator,
        logical_y: HermitianOperator,
        logical_z: HermitianOperator,
        detect_weight: usize,
    ) -> Result<Self> {
        let dim = 1usize << ell;
        for (what, d) in [
            ("logical_zero", logical_zero.dim()),
            ("logical_one", logical_one.dim()),
            ("logical_x", logical_x.dim()),
            ("logical_y", logical_y.dim()),
            ("logical_z", logical_z.dim()),
        ] {
            if d != dim {
                return Err(Error::contract(format!(
                    "{what} has dimension {d}, expected 2^{ell} = {dim}"
                )));
            }
        }
        let code = Self {
            name: name.into(),
            ell,
            logical_zero,
            logical_one,
            logical_x,
            logical_y,
            logical_z,
            detect_weight,
        };
        let orth = code.orthonormality_residual()?;
        if orth > IDENTITY_TOL {
            return Err(Error::contract(format!(
                "logical basis is not orthonormal (residual {orth:e})"
            )));
        }
        let table = code.logical_action_residual()?;
        if table > IDENTITY_TOL {
            return Err(Error::contract(format!(
                "logical operators do not reproduce the Pauli action (residual {table:e})"
            )));
        }
        let comm = code.logical_commutation_residual()?;
        if comm > IDENTITY_TOL {
            return Err(Error::contract(format!(
                "logical operators do not commute with the codespace projector (residual {comm:e})"
            )));
        }
        Ok(code)
    }

    pub fn block_dim(&self) -> usize {
        1 << self.ell
    }

    /// `|0_L><0_L| + |1_L><1_L|` on one block.
    pub fn projector(&self) -> Result<HermitianOperator> {
        HermitianOperator::projector_onto(&[&self.logical_zero, &self.logical_one])
    }

    /// Logical counterpart of a single-qubit Pauli (identity for `I`).
    pub fn logical(&self, p: Pauli) -> HermitianOperator {
        match p {
            Pauli::I => HermitianOperator::identity(self.block_dim()),
            Pauli::X => self.logical_x.clone(),
            Pauli::Y => self.logical_y.clone(),
            Pauli::Z => self.logical_z.clone(),
        }
    }

    /// `a0 |0_L> + a1 |1_L>`
    pub fn logical_state(&self, a0: Complex64, a1: Complex64) -> StateVector {
        let amps = self
            .logical_zero
            .amplitudes()
            .iter()
            .zip(self.logical_one.amplitudes())
            .map(|(z, o)| a0 * z + a1 * o)
            .collect();
        StateVector::from_amplitudes(amps)
    }

    /// `max_{a,b} |<a|b> - delta_ab|` over the logical basis.
    pub fn orthonormality_residual(&self) -> Result<f64> {
        let b = [&self.logical_zero, &self.logical_one];
        let mut worst = 0.0f64;
        for (i, u) in b.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u.inner(v)? - expect).norm());
            }
        }
        Ok(worst)
    }

    /// `max |<a_L| sigma_L |b_L> - <a| sigma |b>|` over `sigma in {X,Y,Z}`,
    /// using the matrices of the stored logical operators.
    pub fn logical_action_residual(&self) -> Result<f64> {
        Ok(self
            .logical_action_table()?
            .iter()
            .map(|e| e.max_residual)
            .fold(0.0, f64::max))
    }

    pub fn logical_action_table(&self) -> Result<Vec<LogicalActionCheck>> {
        let basis = [&self.logical_zero, &self.logical_one];
        let mut out = Vec::new();
        for p in Pauli::NONTRIVIAL {
            let op = self.logical(p);
            let m = p.matrix();
            let mut worst = 0.0f64;
            for (a, bra) in basis.iter().enumerate() {
                for (b, ket) in basis.iter().enumerate() {
                    let got = op.expectation(bra, ket)?;
                    worst = worst.max((got - m[a][b]).norm());
                }
            }
            out.push(LogicalActionCheck {
                operator: p.as_char(),
                max_residual: worst,
            });
        }
        Ok(out)
    }

    /// `max_sigma |[sigma_L, P]|_max`.
    pub fn logical_commutation_residual(&self) -> Result<f64> {
        let p = self.projector()?;
        let mut worst = 0.0f64;
        for s in Pauli::NONTRIVIAL {
            let l = self.logical(s);
            let c = l.mul(&p)?.sub(&p.mul(&l)?)?;
            worst = worst.max(c.max_abs());
        }
        Ok(worst)
    }
}

/// The 4-qubit Jordan-Farhi-Shor code.
///
/// ```text
/// |0_L> = ( |0000> + i|0011> + i|1100> + |1111> ) / 2
/// |1_L> = (-|1010> + i|1001> + i|0110> - |0101> ) / 2
/// X_L =  Y I Y I,  Y_L = -I X X I,  Z_L = Z Z I I
/// ```
pub fn build_jfs_code() -> CodeSpec {
    let ket = |bits: &str| usize::from_str_radix(bits, 2).expect("literal bit string");
    let h = 0.5;
    let mut zero = StateVector::zeros(16);
    let mut one = StateVector::zeros(16);
    {
        let z = zero.amplitudes_mut();
        z[ket("0000")] = Complex64::new(h, 0.0);
        z[ket("0011")] = Complex64::new(0.0, h);
        z[ket("1100")] = Complex64::new(0.0, h);
        z[ket("1111")] = Complex64::new(h, 0.0);
        let o = one.amplitudes_mut();
        o[ket("1010")] = Complex64::new(-h, 0.0);
        o[ket("1001")] = Complex64::new(0.0, h);
        o[ket("0110")] = Complex64::new(0.0, h);
        o[ket("0101")] = Complex64::new(-h, 0.0);
    }
    let reg = QubitRegister::system_only(4).expect("4-qubit register");
    let op = |s: PauliString| pauli_to_operator(&s, &reg, true).expect("real Pauli string");
    let x = op(PauliString::new(1.0, [(0, Pauli::Y), (2, Pauli::Y)]));
    let y = op(PauliString::new(-1.0, [(1, Pauli::X), (2, Pauli::X)]));
    let z = op(PauliString::new(1.0, [(0, Pauli::Z), (1, Pauli::Z)]));
    CodeSpec::new("jfs4", 4, zero, one, x, y, z, 1).expect("JFS code satisfies its invariants")
}

#[derive(Clone, Debug, Serialize)]
pub struct LogicalActionCheck {
    pub operator: char,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StringResidual {
    pub string: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectionReport {
    pub code: String,
    pub ell: usize,
    pub detect_weight: usize,
    pub strings_checked: usize,
    pub max_residual: f64,
    pub worst_string: String,
    /// `|P I P| = 1`; reported for reference, not part of the detected set.
    pub identity_residual: f64,
    pub orthonormality_residual: f64,
    pub logical_action: Vec<LogicalActionCheck>,
    pub logical_commutation_residual: f64,
    pub residuals: Vec<StringResidual>,
    pub passed: bool,
}

/// All Pauli strings of weight `1..=k` on `ell` qubits.
pub fn pauli_strings_up_to_weight(ell: usize, k: usize) -> Vec<PauliString> {
    fn rec(start: usize, ell: usize, left: usize, cur: &mut Vec<(usize, Pauli)>, out: &mut Vec<PauliString>) {
        if !cur.is_empty() {
            out.push(PauliString::new(1.0, cur.iter().copied()));
        }
        if left == 0 {
            return;
        }
        for q in start..ell {
            for p in Pauli::NONTRIVIAL {
                cur.push((q, p));
                rec(q + 1, ell, left - 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, ell, k, &mut Vec::new(), &mut out);
    out
}

/// Check `|P sigma P| <= 1e-12` for every Pauli string of weight up to the
/// code's detect weight. Fails naming the worst offending string.
pub fn verify_detection(code: &CodeSpec) -> Result<DetectionReport> {
    let reg = QubitRegister::system_only(code.ell)?;
    let p = code.projector()?;
    let mut residuals = Vec::new();
    for s in pauli_strings_up_to_weight(code.ell, code.detect_weight) {
        let sigma = pauli_to_operator(&s, &reg, true)?;
        let psp = p.mul(&sigma)?.mul(&p)?;
        residuals.push(StringResidual {
            string: s.label_string(&reg),
            residual: spectral_norm(&psp)?.value,
        });
    }
    let identity_residual = spectral_norm(&p.mul(&p)?)?.value;
    let (worst_string, max_residual) = residuals
        .iter()
        .map(|r| (r.string.clone(), r.residual))
        .fold((String::new(), 0.0f64), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let report = DetectionReport {
        code: code.name.clone(),
        ell: code.ell,
        detect_weight: code.detect_weight,
        strings_checked: residuals.len(),
        max_residual,
        worst_string: worst_string.clone(),
        identity_residual,
        orthonormality_residual: code.orthonormality_residual()?,
        logical_action: code.logical_action_table()?,
        logical_commutation_residual: code.logical_commutation_residual()?,
        residuals,
        passed: max_residual <= IDENTITY_TOL,
    };
    if !report.passed {
        return Err(Error::contract(format!(
            "code {} fails to detect {worst_string}: |P sigma P| = {max_residual:e}",
            code.name
        )));
    }
    Ok(report)
}

/// Replace each Pauli factor on logical qubit `i` of `h` by the code's
/// logical operator on block `i`. Labels in `h` are logical indices. The
/// result lives on the `ell * n_logical`-qubit system register.
pub fn encode_hamiltonian(
    h: &PauliSum,
    code: &CodeSpec,
    n_logical: usize,
) -> Result<HermitianOperator> {
    if n_logical == 0 {
        return Err(Error::contract("need at least one logical qubit"));
    }
    let dim = 1usize << (code.ell * n_logical);
    let hermitian = h.has_real_coefficients(0.0);
    let mut total = HermitianOperator::zeros(dim);
    for term in h.terms() {
        if let Some(q) = term.max_label() {
            if q >= n_logical {
                return Err(Error::contract(format!(
                    "logical Pauli string {term} references qubit {q} but only {n_logical} are encoded"
                )));
            }
        }
        let mut op = code.logical(term.get(0));
        for i in 1..n_logical {
            op = op.kron(&code.logical(term.get(i)));
        }
        total = total.add(&op.scale_complex(term.coefficient))?;
    }
    if hermitian {
        total.assert_hermitian()
    } else {
        Ok(total)
    }
}

/// Projectors `P_i`, `Q_i = I - P_i`, `P = prod P_i`, `Q~ = sum Q_i` and the
/// graded family `R_0 .. R_n`, all acting on the full register (identity on
/// the environment). System-only copies of `P` and `Q~` are kept for
/// factorized computations.
#[derive(Clone, Debug)]
pub struct ProjectorFamily {
    pub n_logical: usize,
    pub system_dim: usize,
    pub env_dim: usize,
    pub p: Vec<HermitianOperator>,
    pub q: Vec<HermitianOperator>,
    pub total_p: HermitianOperator,
    pub penalty_q: HermitianOperator,
    pub r: Vec<HermitianOperator>,
    pub total_p_system: HermitianOperator,
    pub penalty_q_system: HermitianOperator,
    pub p_system: Vec<HermitianOperator>,
}

/// Build the projector family for `n_logical` blocks of `code` on `reg`.
///
/// `R_r` is expanded explicitly over all `2^n` subsets of blocks.
pub fn build_projector_family(
    code: &CodeSpec,
    n_logical: usize,
    reg: &QubitRegister,
) -> Result<ProjectorFamily> {
    if n_logical == 0 || reg.n_system() != code.ell * n_logical {
        return Err(Error::contract(format!(
            "register has {} system qubits but {n_logical} logical qubits of a [[{},1]] code need {}",
            reg.n_system(),
            code.ell,
            code.ell * n_logical
        )));
    }
    if n_logical > R_FAMILY_WARN_LOGICAL {
        log::warn!(
            "expanding the R_r family over 2^{n_logical} subsets; this grows exponentially"
        );
    }
    let block = code.projector()?;
    let bd = code.block_dim();
    let system_dim = reg.system_dim();
    let env_dim = reg.env_dim();
    let id_sys = HermitianOperator::identity(system_dim);

    let p_sys: Vec<HermitianOperator> = (0..n_logical)
        .map(|i| block.embed(bd.pow(i as u32), bd.pow((n_logical - 1 - i) as u32)))
        .collect();
    let q_sys: Vec<HermitianOperator> = p_sys
        .iter()
        .map(|p| id_sys.sub(p).map(|q| q.pruned(0.0)))
        .collect::<Result<_>>()?;

    let mut r_sys: Vec<HermitianOperator> =
        (0..=n_logical).map(|_| HermitianOperator::zeros(system_dim)).collect();
    for subset in 0usize..(1 << n_logical) {
        let mut term = id_sys.clone();
        for i in 0..n_logical {
            let factor = if subset >> i & 1 == 1 { &q_sys[i] } else { &p_sys[i] };
            term = term.mul(factor)?;
        }
        let r = subset.count_ones() as usize;
        r_sys[r] = r_sys[r].add(&term)?;
    }
    let r_sys: Vec<HermitianOperator> = r_sys
        .into_iter()
        .map(|r| r.pruned(1e-15).assert_hermitian())
        .collect::<Result<_>>()?;

    let mut total_p_system = id_sys.clone();
    for p in &p_sys {
        total_p_system = total_p_system.mul(p)?;
    }
    let total_p_system = total_p_system.pruned(1e-15).assert_hermitian()?;
    let mut penalty_q_system = HermitianOperator::zeros(system_dim);
    for q in &q_sys {
        penalty_q_system = penalty_q_system.add(q)?;
    }

    let full = |op: &HermitianOperator| op.embed(1, env_dim);
    Ok(ProjectorFamily {
        n_logical,
        system_dim,
        env_dim,
        p: p_sys.iter().map(full).collect(),
        q: q_sys.iter().map(full).collect(),
        total_p: full(&total_p_system),
        penalty_q: full(&penalty_q_system),
        r: r_sys.iter().map(full).collect(),
        total_p_system,
        penalty_q_system,
        p_system: p_sys,
    })
}

impl ProjectorFamily {
    pub fn dim(&self) -> usize {
        self.system_dim * self.env_dim
    }

    /// `exp(i * E_P * tau * Q~)` on the full register, computed by a dense
    /// eigendecomposition of the system-only `Q~` (independent of `R_r`).
    pub fn penalty_phase(&self, e_penalty: f64, tau: f64) -> Result<HermitianOperator> {
        let sys = exp_i_hermitian(&self.penalty_q_system, e_penalty * tau)?;
        Ok(sys.embed(1, self.env_dim))
    }

    /// Residuals of the `R_r` algebra: `max(|sum R_r - I|, |R_r R_s - delta R_r|)`.
    pub fn r_family_residual(&self) -> Result<f64> {
        let dim = self.dim();
        let mut sum = HermitianOperator::zeros(dim);
        for r in &self.r {
            sum = sum.add(r)?;
        }
        let mut worst = sum.sub(&HermitianOperator::identity(dim))?.max_abs();
        for (i, a) in self.r.iter().enumerate() {
            for (j, b) in self.r.iter().enumerate() {
                let prod = a.mul(b)?;
                let res = if i == j { prod.sub(a)?.max_abs() } else { prod.max_abs() };
                worst = worst.max(res);
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCheckReport {
    pub e_penalty: f64,
    pub tau: f64,
    /// Frobenius norm of `P V P`.
    pub pvp_residual: f64,
    /// `|exp(i E_P Q~ tau) V P - sum_{r>=1} e^{i r E_P tau} R_r V P|_F`
    pub graded_residual: f64,
    /// `|exp(i E_P Q~ tau) V P - e^{i E_P tau} V P|_F`; zero for 1-local `V`.
    pub single_phase_residual: f64,
    pub graded_holds: bool,
    pub single_phase_holds: bool,
}

/// Tolerance for the phase-decomposition identities.
pub const PHASE_TOL: f64 = 1e-10;

/// Verify the penalty-phase decompositions of `V P`.
///
/// The left side `exp(i E_P Q~ tau) V P` is built from a dense exponential of
/// `Q~`; the right sides use the `R_r` family and the single phase
/// `e^{i E_P tau}`. Requires `P V P = 0`.
pub fn phase_decomposition_check(
    v: &HermitianOperator,
    fam: &ProjectorFamily,
    e_penalty: f64,
    tau: f64,
) -> Result<PhaseCheckReport> {
    if v.dim() != fam.dim() {
        return Err(Error::contract(format!(
            "V has dimension {} but the projector family acts on {}",
            v.dim(),
            fam.dim()
        )));
    }
    let vp = v.mul(&fam.total_p)?;
    let pvp = fam.total_p.mul(&vp)?.frobenius_norm();
    let scale = v.max_abs().max(1.0);
    if pvp > PHASE_TOL * scale {
        return Err(Error::contract(format!(
            "precondition P V P = 0 violated: |P V P|_F = {pvp:e}"
        )));
    }
    let lhs = fam.penalty_phase(e_penalty, tau)?.mul(&vp)?;
    let mut graded = HermitianOperator::zeros(fam.dim());
    for (r, rr) in fam.r.iter().enumerate().skip(1) {
        let phase = Complex64::from_polar(1.0, r as f64 * e_penalty * tau);
        graded = graded.add(&rr.mul(&vp)?.scale_complex(phase))?;
    }
    let single = vp.scale_complex(Complex64::from_polar(1.0, e_penalty * tau));
    let graded_residual = lhs.sub(&graded)?.frobenius_norm();
    let single_phase_residual = lhs.sub(&single)?.frobenius_norm();
    Ok(PhaseCheckReport {
        e_penalty,
        tau,
        pvp_residual: pvp,
        graded_residual,
        single_phase_residual,
        graded_holds: graded_residual < PHASE_TOL,
        single_phase_holds: single_phase_residual < PHASE_TOL,
    })
}

/// Encode a logical Pauli sum and embed it as `H_L ⊗ I_env` on `reg`.
pub fn encode_on_register(
    h: &PauliSum,
    code: &CodeSpec,
    n_logical: usize,
    reg: &QubitRegister,
) -> Result<HermitianOperator> {
    let sys = encode_hamiltonian(h, code, n_logical)?;
    if sys.dim() != reg.system_dim() {
        return Err(Error::contract("encoded Hamiltonian does not match the system block"));
    }
    Ok(sys.embed(1, reg.env_dim()))
}

/// Sum of 1-local system error strings used by tests and examples:
/// `sum_w c_w sigma^w` on the system qubits of `reg`.
pub fn system_error_operator(terms: &[(usize, Pauli, f64)], reg: &QubitRegister) -> Result<HermitianOperator> {
    let sum = PauliSum::from_terms(terms.iter().map(|&(q, p, c)| PauliString::single(q, p, c)));
    pauli_sum_to_operator(&sum, reg, true)
}
