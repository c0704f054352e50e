use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};

/// Name of a shipped code. Only the 4-qubit code is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeName {
    #[serde(rename = "jfs4")]
    Jfs4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    LinearInterpolation,
}

/// One weighted Pauli string on the logical register, written densely:
/// `{"coeff": 0.5, "paulis": "XZ"}` is `0.5 X_0 Z_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    pub coeff: f64,
    pub paulis: String,
}

impl PauliTerm {
    pub fn new(coeff: f64, paulis: &str) -> Self {
        Self {
            coeff,
            paulis: paulis.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    pub endpoints: Vec<Vec<PauliTerm>>,
    pub total_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemStateKind {
    LogicalCoeffs,
    #[serde(rename = "plus_L")]
    PlusL,
    #[serde(rename = "zero_L")]
    ZeroL,
    RandomCodespace,
}

/// Initial logical state. `coeffs` are `[re, im]` pairs over the `2^n`
/// logical basis and are only read for `logical_coeffs` (pass `[]` otherwise).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemStateConfig {
    pub kind: SystemStateKind,
    pub coeffs: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvStateKind {
    Random,
}

/// Serialized description of one experiment instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_logical: usize,
    pub code: CodeName,
    pub n_env: usize,
    pub seed: u64,
    pub lambda: f64,
    pub e_penalty: f64,
    pub h_comp: ScheduleConfig,
    pub initial_system_state: SystemStateConfig,
    pub initial_env_state: EnvStateKind,
}

/// Largest logical register accepted by configs; keeps the full register
/// within reach of the dense propagator.
pub const MAX_LOGICAL: usize = 2;

/// Largest full register a config may describe.
pub const MAX_TOTAL_QUBITS: usize = 20;

/// Tolerance on the norm of user-supplied logical coefficients.
pub const COEFF_NORM_TOL: f64 = 1e-6;

impl ModelConfig {
    /// One JFS logical qubit, 8 environment qubits, `H_comp = X_L`,
    /// `lambda = 0.1`, no penalty, random codespace state.
    pub fn paper_default(seed: u64) -> Self {
        Self {
            n_logical: 1,
            code: CodeName::Jfs4,
            n_env: 8,
            seed,
            lambda: 0.1,
            e_penalty: 0.0,
            h_comp: ScheduleConfig {
                kind: ScheduleKind::Constant,
                endpoints: vec![vec![PauliTerm::new(1.0, "X")]],
                total_time: 0.0,
            },
            initial_system_state: SystemStateConfig {
                kind: SystemStateKind::RandomCodespace,
                coeffs: vec![],
            },
            initial_env_state: EnvStateKind::Random,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::validation(msg));
        if self.n_logical == 0 || self.n_logical > MAX_LOGICAL {
            return bad(format!("n_logical must be in 1..={MAX_LOGICAL}, got {}", self.n_logical));
        }
        let n_sys = 4 * self.n_logical;
        if self.n_env < 4 || self.n_env % 2 != 0 {
            return bad(format!("n_env must be even and at least 4, got {}", self.n_env));
        }
        if self.n_env < n_sys {
            return bad(format!(
                "n_env = {} cannot give each of the {n_sys} system qubits its own environment qubit",
                self.n_env
            ));
        }
        if n_sys + self.n_env > MAX_TOTAL_QUBITS {
            return bad(format!(
                "{} total qubits exceeds the supported {MAX_TOTAL_QUBITS}",
                n_sys + self.n_env
            ));
        }
        if !self.lambda.is_finite() || !self.e_penalty.is_finite() {
            return bad("lambda and e_penalty must be finite".into());
        }
        let h = &self.h_comp;
        let want = match h.kind {
            ScheduleKind::Constant => 1,
            ScheduleKind::LinearInterpolation => 2,
        };
        if h.endpoints.len() != want {
            return bad(format!(
                "h_comp of kind {:?} needs {want} endpoint(s), got {}",
                h.kind,
                h.endpoints.len()
            ));
        }
        if !h.total_time.is_finite() || h.total_time < 0.0 {
            return bad("h_comp.total_time must be finite and non-negative".into());
        }
        if h.kind == ScheduleKind::LinearInterpolation && h.total_time <= 0.0 {
            return bad("linear_interpolation needs total_time > 0".into());
        }
        for ep in &h.endpoints {
            self.logical_sum(ep)?;
        }
        let s = &self.initial_system_state;
        match s.kind {
            SystemStateKind::LogicalCoeffs => {
                let dim = 1usize << self.n_logical;
                if s.coeffs.len() != dim {
                    return bad(format!(
                        "logical_coeffs needs {dim} coefficients, got {}",
                        s.coeffs.len()
                    ));
                }
                let norm: f64 = s.coeffs.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum();
                if !norm.is_finite() || (norm.sqrt() - 1.0).abs() > COEFF_NORM_TOL {
                    return bad(format!("logical_coeffs must have unit norm, got {}", norm.sqrt()));
                }
            }
            _ => {
                if !s.coeffs.is_empty() {
                    return bad(format!("coeffs must be empty for kind {:?}", s.kind));
                }
            }
        }
        Ok(())
    }

    /// Parse one endpoint into a Pauli sum on logical qubits `0..n_logical`.
    pub fn logical_sum(&self, terms: &[PauliTerm]) -> Result<PauliSum> {
        let mut sum = PauliSum::new();
        for t in terms {
            if t.paulis.chars().count() != self.n_logical {
                return Err(Error::validation(format!(
                    "Pauli term '{}' must have one letter per logical qubit ({})",
                    t.paulis, self.n_logical
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::validation("non-finite Pauli coefficient"));
            }
            let s = PauliString::from_dense(t.coeff, &t.paulis, 0)
                .map_err(|e| Error::validation(e.to_string()))?;
            sum.push(s);
        }
        Ok(sum)
    }

    pub fn logical_coeffs(&self) -> Vec<Complex64> {
        self.initial_system_state
            .coeffs
            .iter()
            .map(|c| Complex64::new(c[0], c[1]))
            .collect()
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types always serialize");
    hex::encode(Sha256::digest(&bytes))
}
