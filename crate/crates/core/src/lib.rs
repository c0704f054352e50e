//! Energy-penalty error suppression for encoded Hamiltonian quantum computation.
//!
//! A computational Hamiltonian is encoded in an error-detecting code, coupled
//! 1-locally to a random qubit environment, and protected by a constant
//! penalty on states outside the codespace:
//!
//! ```text
//! H(t) = H_comp^L(t) + H_env + lambda V + E_P Q~
//! ```
//!
//! The crate builds these operators, propagates states exactly, and computes
//! the fidelity diagnostics and operator bounds used to judge the protection.
//!
//! Module map:
//! - [`pauli`], [`operator`], [`state`]: register algebra and sparse operators.
//! - [`code`]: codes, projector families and operator identities.
//! - [`model`]: seeded experiment instances.
//! - [`propagate`]: spectral and stepped propagators.
//! - [`analysis`]: fidelities, the modulated error operator and its bounds.
//! - [`harness`]: experiment plans, sweeps and CSV output.

pub mod analysis;
pub mod code;
pub mod error;
pub mod harness;
pub mod model;
pub mod pauli;
pub mod operator;
pub mod propagate;
pub mod state;

pub use code::{build_jfs_code, build_projector_family, encode_hamiltonian, verify_detection, CodeSpec, ProjectorFamily};
pub use error::{Error, Result};
pub use operator::{commutator, pauli_sum_to_operator, pauli_to_operator, spectral_norm, HermitianOperator};
pub use pauli::{Pauli, PauliString, PauliSum, QubitRegister};
pub use state::StateVector;
