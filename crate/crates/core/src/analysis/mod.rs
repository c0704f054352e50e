//! Diagnostics: fidelities, the error operator and its bounds, the
//! large-penalty limit, protection times and the three-level model.

mod error_operator;
mod fidelity;
mod limits;
mod toy;

pub use error_operator::{
    admissible_f_norm, bound_f, compute_f, cross_term_norm, error_operator_norms, fidelity_bound, operator_norm,
    phase_integral, BoundInputs, EigenFrame, ErrorOperatorPoint, FRAME_TOL,
};
pub use fidelity::{
    check_density, codespace_probability, codespace_probability_rho, fidelity_point, partial_trace_env,
    system_fidelity_sq, total_fidelity_sq, FidelityPoint, NORM_TOL, PSD_TOL,
};
pub use limits::{
    codespace_ground_state, dephasing_prediction, linear_fit, longterm_fidelity, longterm_fidelity_prepared,
    protection_time, protection_time_prepared, theorem_limit_check, LimitPoint, LongTermFidelity, ProtectionTime,
    ScanOptions, TheoremLimitReport, EXPONENT_BAND,
};
pub use toy::{toy_model, transition_probability, ToyModelParams, ToyModelReport, PERTURBATIVE_RATIO};
