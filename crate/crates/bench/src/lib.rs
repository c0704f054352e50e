//! Benchmarks for the propagators and diagnostics; see `benches/`.

use penaltyguard::model::{assemble, ModelConfig, ModelInstance};

/// Instance of the default class with a reduced environment.
pub fn bench_instance(n_env: usize, e_penalty: f64) -> ModelInstance {
    let mut cfg = ModelConfig::paper_default(1);
    cfg.n_env = n_env;
    cfg.e_penalty = e_penalty;
    assemble(&cfg).expect("benchmark config is valid")
}
