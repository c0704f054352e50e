//! Seeded experiment instances.
//!
//! An instance fixes the encoded computational schedule, the random
//! environment on a 3-regular graph, the 1-local coupling `V` and the
//! penalty `E_P Q~`, together with the initial product state. Every random
//! draw comes from its own stream of the master seed (see [`Stream`]), so
//! changing one part of a config does not reshuffle the others.

mod config;
mod environment;

pub use config::{
    CodeName, EnvStateKind, ModelConfig, PauliTerm, ScheduleConfig, ScheduleKind,
    SystemStateConfig, SystemStateKind, COEFF_NORM_TOL, MAX_LOGICAL, MAX_TOTAL_QUBITS,
};
pub(crate) use config::hash_json;
pub use environment::{
    build_coupling, build_environment, coupling_from_draws, random_coupling_map,
    random_cubic_graph, stream_rng, unit_vector, BondField, Coupling, CouplingDraws,
    CouplingField, Environment, EnvironmentDraws, RegularGraph, SiteField, Stream,
    COEFF_RANGE, GRAPH_RETRY_BUDGET,
};

use num_complex::Complex64;

use crate::code::{build_jfs_code, build_projector_family, encode_hamiltonian, CodeSpec, ProjectorFamily};
use crate::error::{Error, Result};
use crate::operator::{pauli_sum_to_operator, HermitianOperator};
use crate::pauli::{PauliSum, QubitRegister};
use crate::propagate::ScheduledOperator;
use crate::state::StateVector;

/// `PVP` must vanish to this Frobenius norm at build time.
pub const PVP_TOL: f64 = 1e-12;

/// Encoded computational Hamiltonian as a function of time. Endpoints are
/// kept both as logical Pauli sums and as system-only operators.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub logical: Vec<PauliSum>,
    pub encoded: Vec<HermitianOperator>,
    pub total_time: f64,
}

impl Schedule {
    pub fn is_constant(&self) -> bool {
        self.kind == ScheduleKind::Constant
    }

    /// Endpoint weights `(1 - s, s)` with `s = t / T` clamped to `[0, 1]`.
    pub fn weights(&self, t: f64) -> (f64, f64) {
        match self.kind {
            ScheduleKind::Constant => (1.0, 0.0),
            ScheduleKind::LinearInterpolation => {
                let s = (t / self.total_time).clamp(0.0, 1.0);
                (1.0 - s, s)
            }
        }
    }

    /// Encoded `H_comp^L(t)` on the system qubits.
    pub fn system_at(&self, t: f64) -> Result<HermitianOperator> {
        let (wa, wb) = self.weights(t);
        let mut h = self.encoded[0].scale(wa);
        if let Some(b) = self.encoded.get(1) {
            h = h.add(&b.scale(wb))?;
        }
        Ok(h)
    }

    /// Unencoded `H_comp(t)` on the logical register.
    pub fn logical_at(&self, t: f64) -> PauliSum {
        let (wa, wb) = self.weights(t);
        let mut h = self.logical[0].scaled(wa);
        if let Some(b) = self.logical.get(1) {
            h.extend(b.scaled(wb));
        }
        h
    }
}

/// A fully materialized instance.
///
/// Operators named `*_full` act on the whole register; the others act on
/// the system or environment block alone, as documented per field.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub config: ModelConfig,
    pub config_hash: String,
    pub reg: QubitRegister,
    pub code: CodeSpec,
    pub schedule: Schedule,
    pub environment: Environment,
    pub coupling: Coupling,
    /// `V` on the full register.
    pub v: HermitianOperator,
    /// `V_i`: the terms of `V` acting on logical block `i`.
    pub v_blocks: Vec<HermitianOperator>,
    pub fam: ProjectorFamily,
    pub lambda: f64,
    pub e_penalty: f64,
    pub seed: u64,
    /// `H_env + lambda V + E_P Q~` on the full register.
    pub static_full: HermitianOperator,
    /// Schedule endpoints embedded as `H ⊗ I_env`.
    pub endpoints_full: Vec<HermitianOperator>,
    /// Initial system state (system block) and environment state.
    pub psi_system: StateVector,
    pub psi_env: StateVector,
}

/// Build the instance described by `config`.
pub fn assemble(config: &ModelConfig) -> Result<ModelInstance> {
    config.validate()?;
    let code = match config.code {
        CodeName::Jfs4 => build_jfs_code(),
    };
    let n = config.n_logical;
    let n_sys = code.ell * n;
    let reg = QubitRegister::new(n_sys, config.n_env)?;
    let seed = config.seed;

    let logical: Vec<PauliSum> = config
        .h_comp
        .endpoints
        .iter()
        .map(|ep| config.logical_sum(ep))
        .collect::<Result<_>>()?;
    let encoded: Vec<HermitianOperator> = logical
        .iter()
        .map(|h| encode_hamiltonian(h, &code, n))
        .collect::<Result<_>>()?;
    let schedule = Schedule {
        kind: config.h_comp.kind,
        logical,
        encoded,
        total_time: config.h_comp.total_time,
    };

    let environment = build_environment(config.n_env, seed)?;
    let map = random_coupling_map(n_sys, config.n_env, seed)?;
    let coupling = build_coupling(&reg, &map, seed)?;
    let v = coupling.v.clone();
    let v_blocks: Vec<HermitianOperator> = (0..n)
        .map(|i| {
            let part = coupling.draws.pauli_sum(&reg, i * code.ell..(i + 1) * code.ell);
            pauli_sum_to_operator(&part, &reg, true)
        })
        .collect::<Result<_>>()?;

    let fam = build_projector_family(&code, n, &reg)?;
    let pvp = fam.total_p.mul(&v)?.mul(&fam.total_p)?.frobenius_norm();
    if pvp > PVP_TOL {
        return Err(Error::contract(format!("coupling is not detected by the code: |PVP| = {pvp:e}")));
    }

    let h_env_full = environment.h_env.embed(reg.system_dim(), 1);
    let static_full = h_env_full
        .add(&v.scale(config.lambda))?
        .add(&fam.penalty_q.scale(config.e_penalty))?
        .pruned(0.0);
    let endpoints_full: Vec<HermitianOperator> = schedule
        .encoded
        .iter()
        .map(|h| h.embed(1, reg.env_dim()))
        .collect();

    let psi_system = initial_system_state(config, &code)?;
    let mut env_rng = stream_rng(seed, Stream::EnvState);
    let psi_env = StateVector::random(reg.env_dim(), &mut env_rng);

    Ok(ModelInstance {
        config_hash: config.hash(),
        config: config.clone(),
        reg,
        code,
        schedule,
        environment,
        coupling,
        v,
        v_blocks,
        fam,
        lambda: config.lambda,
        e_penalty: config.e_penalty,
        seed,
        static_full,
        endpoints_full,
        psi_system,
        psi_env,
    })
}

/// Encode `sum_k c_k |k>` on `n` logical qubits into the product code.
pub fn encode_logical_state(code: &CodeSpec, coeffs: &[Complex64]) -> Result<StateVector> {
    let n = coeffs.len().trailing_zeros() as usize;
    if coeffs.is_empty() || 1usize << n != coeffs.len() {
        return Err(Error::contract("logical coefficients must have length 2^n"));
    }
    let mut out = StateVector::zeros(1 << (code.ell * n));
    for (k, &c) in coeffs.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut basis = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0)]);
        for i in 0..n {
            let bit = k >> (n - 1 - i) & 1;
            let block = if bit == 0 { &code.logical_zero } else { &code.logical_one };
            basis = basis.kron(block);
        }
        out = out.axpy(c, &basis)?;
    }
    Ok(out)
}

fn initial_system_state(config: &ModelConfig, code: &CodeSpec) -> Result<StateVector> {
    let n = config.n_logical;
    let dim = 1usize << n;
    let coeffs: Vec<Complex64> = match config.initial_system_state.kind {
        SystemStateKind::LogicalCoeffs => {
            let c = StateVector::from_amplitudes(config.logical_coeffs());
            c.normalized()?.into_amplitudes()
        }
        SystemStateKind::ZeroL => StateVector::basis(dim, 0).into_amplitudes(),
        SystemStateKind::PlusL => vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim],
        SystemStateKind::RandomCodespace => {
            let mut rng = stream_rng(config.seed, Stream::SystemState);
            StateVector::random(dim, &mut rng).into_amplitudes()
        }
    };
    encode_logical_state(code, &coeffs)
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.reg.dim()
    }

    pub fn is_time_independent(&self) -> bool {
        self.schedule.is_constant()
    }

    /// `H_env` on the environment block.
    pub fn h_env(&self) -> &HermitianOperator {
        &self.environment.h_env
    }

    /// `H_comp^L(t)` on the system block.
    pub fn h0_system_at(&self, t: f64) -> Result<HermitianOperator> {
        self.schedule.system_at(t)
    }

    /// `H_0(t) = H_comp^L(t) ⊗ I + I ⊗ H_env` on the full register.
    pub fn h0_full_at(&self, t: f64) -> Result<HermitianOperator> {
        let sys = self.schedule.system_at(t)?.embed(1, self.reg.env_dim());
        sys.add(&self.environment.h_env.embed(self.reg.system_dim(), 1))
    }

    /// Full `H(t) = H_comp^L(t) + H_env + lambda V + E_P Q~` as a schedule.
    pub fn hamiltonian(&self) -> Result<ScheduledOperator> {
        let interval = self.static_interval();
        ScheduledOperator::new(
            self.static_full.clone(),
            self.endpoints_full.clone(),
            self.schedule.kind,
            self.schedule.total_time,
        )?
        .with_static_interval(interval)
    }

    /// `H(t)` materialized at one time.
    pub fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator> {
        let (wa, wb) = self.schedule.weights(t);
        let mut h = self.static_full.add(&self.endpoints_full[0].scale(wa))?;
        if let Some(b) = self.endpoints_full.get(1) {
            h = h.add(&b.scale(wb))?;
        }
        Ok(h)
    }

    /// Weyl-sum interval for the static part: Gershgorin for `H_env` and
    /// `lambda V`, exact `[0, n E_P]` for the penalty.
    pub fn static_interval(&self) -> (f64, f64) {
        let (el, eh) = self.environment.h_env.gershgorin_bounds();
        let (vl, vh) = self.v.gershgorin_bounds();
        let (vl, vh) = if self.lambda >= 0.0 {
            (self.lambda * vl, self.lambda * vh)
        } else {
            (self.lambda * vh, self.lambda * vl)
        };
        let top = self.e_penalty * self.fam.n_logical as f64;
        (el + vl + top.min(0.0), eh + vh + top.max(0.0))
    }

    /// `|psi> = |psi^s> ⊗ |psi^e>`.
    pub fn initial_state(&self) -> StateVector {
        self.psi_system.kron(&self.psi_env)
    }

    /// Same instance with `lambda` and `E_P` replaced; random draws unchanged.
    pub fn with_couplings(&self, lambda: f64, e_penalty: f64) -> Result<ModelInstance> {
        let mut cfg = self.config.clone();
        cfg.lambda = lambda;
        cfg.e_penalty = e_penalty;
        assemble(&cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutator;

    fn small(seed: u64) -> ModelConfig {
        let mut cfg = ModelConfig::paper_default(seed);
        cfg.n_env = 4;
        cfg.e_penalty = 8.0;
        cfg
    }

    #[test]
    fn assemble_small_instance() {
        let inst = assemble(&small(1)).unwrap();
        assert_eq!(inst.dim(), 256);
        let h = inst.hamiltonian_at(0.0).unwrap();
        assert!(h.is_hermitian());
        assert!(h.hermiticity_residual() < 1e-12);
        assert!((inst.initial_state().norm() - 1.0).abs() < 1e-12);
        let p = inst.fam.total_p.apply(&inst.initial_state()).unwrap();
        assert!(p.distance(&inst.initial_state()) < 1e-12);
    }

    #[test]
    fn deterministic_operators() {
        let a = assemble(&small(4)).unwrap();
        let b = assemble(&small(4)).unwrap();
        assert_eq!(a.static_full.matrix(), b.static_full.matrix());
        assert_eq!(a.psi_env, b.psi_env);
        assert_eq!(a.config_hash, b.config_hash);
    }

    #[test]
    fn h0_commutes_with_codespace_projector() {
        let inst = assemble(&small(2)).unwrap();
        let c = commutator(&inst.h0_full_at(0.0).unwrap(), &inst.fam.total_p).unwrap();
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn h_env_is_identity_on_system() {
        let inst = assemble(&small(3)).unwrap();
        let full = inst.h_env().embed(inst.reg.system_dim(), 1);
        for t in inst.environment.draws.pauli_sum(inst.reg.n_system()).terms() {
            assert_eq!(t.weight_where(|q| inst.reg.is_system(q)), 0);
        }
        let sys_x = crate::pauli_to_operator(
            &crate::PauliString::single(0, crate::Pauli::X, 1.0),
            &inst.reg,
            true,
        )
        .unwrap();
        assert!(commutator(&full, &sys_x).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn logical_states() {
        let code = build_jfs_code();
        let s = encode_logical_state(&code, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(s, code.logical_one);
        let two = encode_logical_state(
            &code,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(two, code.logical_zero.kron(&code.logical_one));
    }

    #[test]
    fn linear_schedule_weights() {
        let mut cfg = small(1);
        cfg.h_comp = ScheduleConfig {
            kind: ScheduleKind::LinearInterpolation,
            endpoints: vec![vec![PauliTerm::new(1.0, "X")], vec![PauliTerm::new(1.0, "Z")]],
            total_time: 10.0,
        };
        let inst = assemble(&cfg).unwrap();
        let mid = inst.schedule.system_at(5.0).unwrap();
        let want = inst.code.logical_x.scale(0.5).add(&inst.code.logical_z.scale(0.5)).unwrap();
        assert!(mid.sub(&want).unwrap().max_abs() < 1e-15);
        assert_eq!(inst.schedule.weights(20.0), (0.0, 1.0));
    }
}
