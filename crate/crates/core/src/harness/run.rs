use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::{ExperimentPlan, OutputKind};
use crate::analysis::{
    fidelity_point, longterm_fidelity_prepared, protection_time_prepared, FidelityPoint, LongTermFidelity,
    ProtectionTime,
};
use crate::error::{Error, Result};
use crate::model::assemble;
use crate::propagate::{InstancePropagator, PropagatorSettings};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Peak memory of one grid point at the full default size: a dense
/// 4096 x 4096 complex Hamiltonian, its eigenvectors and solver workspace.
pub const DEFAULT_POINT_MEMORY: u64 = 1 << 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan_name: String,
    pub plan_hash: String,
    pub index: usize,
    pub e_penalty: f64,
    pub lambda: f64,
    pub seed: u64,
    pub config_hash: String,
    pub settings: PropagatorSettings,
    pub series: Vec<FidelityPoint>,
    pub protection: Option<ProtectionTime>,
    pub long_term: Option<LongTermFidelity>,
    /// Set when the point failed; the other result fields are then empty.
    pub error: Option<String>,
    /// Not covered by the determinism guarantee.
    pub wall_clock_s: f64,
    pub tool_version: String,
}

impl RunRecord {
    pub fn t_prot(&self) -> Option<f64> {
        self.protection.as_ref().and_then(|p| p.t_prot)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Worker count: `requested` (or the available parallelism), capped so that
/// `workers * point_memory` stays within `memory_budget`.
pub fn resolve_workers(requested: Option<usize>, memory_budget: u64, point_memory: u64) -> usize {
    let want = requested
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let cap = (memory_budget / point_memory.max(1)).max(1) as usize;
    want.min(cap)
}

fn run_point(plan: &ExperimentPlan, hash: &str, index: usize) -> Result<RunRecord> {
    let start = Instant::now();
    let cfg = plan.config_for(index);
    let inst = assemble(&cfg)?;
    let prop = InstancePropagator::new(&inst, plan.settings.clone())?;
    let p_sys = &inst.fam.total_p_system;
    let wants = |k: OutputKind| plan.outputs.contains(&k);
    let pair = if inst.is_time_independent() && prop.full_spectral().is_some() {
        Some(prop.prepare(&inst.psi_system, &inst.psi_env)?)
    } else {
        None
    };

    let mut series = Vec::new();
    if wants(OutputKind::Series) {
        let times = plan.time_grid.times();
        series = match &pair {
            Some(pair) => times
                .iter()
                .map(|&t| {
                    let (phi, s, e) = pair.at(t)?;
                    fidelity_point(t, &phi, &s, &e, p_sys)
                })
                .collect::<Result<_>>()?,
            None => {
                let tr = prop.trajectory(&inst.psi_system, &inst.psi_env, &times, true)?;
                (0..times.len())
                    .map(|k| fidelity_point(times[k], &tr.phi[k], &tr.phi0_system[k], &tr.phi0_env[k], p_sys))
                    .collect::<Result<_>>()?
            }
        };
    }
    let need_pair = || {
        pair.as_ref()
            .ok_or_else(|| Error::contract("this output needs the spectral method on a constant schedule"))
    };
    let protection = if wants(OutputKind::ProtectionTime) {
        let p = &plan.protection;
        Some(protection_time_prepared(need_pair()?, p_sys, p.threshold, &p.scan)?)
    } else {
        None
    };
    let long_term = if wants(OutputKind::LongTerm) {
        Some(longterm_fidelity_prepared(need_pair()?, &inst, &inst.psi_system, &plan.long_term_times)?)
    } else {
        None
    };
    Ok(RunRecord {
        plan_name: plan.name.clone(),
        plan_hash: hash.to_string(),
        index,
        e_penalty: cfg.e_penalty,
        lambda: cfg.lambda,
        seed: cfg.seed,
        config_hash: inst.config_hash.clone(),
        settings: plan.settings.clone(),
        series,
        protection,
        long_term,
        error: None,
        wall_clock_s: start.elapsed().as_secs_f64(),
        tool_version: TOOL_VERSION.to_string(),
    })
}

fn failed(plan: &ExperimentPlan, hash: &str, index: usize, msg: String) -> RunRecord {
    let cfg = plan.config_for(index);
    RunRecord {
        plan_name: plan.name.clone(),
        plan_hash: hash.to_string(),
        index,
        e_penalty: cfg.e_penalty,
        lambda: cfg.lambda,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        settings: plan.settings.clone(),
        series: Vec::new(),
        protection: None,
        long_term: None,
        error: Some(msg),
        wall_clock_s: 0.0,
        tool_version: TOOL_VERSION.to_string(),
    }
}

/// One record per grid point, in grid order. The plan is validated before
/// any compute; a failing or panicking point yields an error record and
/// leaves the others untouched.
///
/// Sets faer's global parallelism to sequential: points already run in
/// parallel, and dense kernels split by thread count would make results
/// depend on `workers`.
pub fn run_experiment(plan: &ExperimentPlan, workers: usize) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let hash = plan.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::numerical(format!("could not start the worker pool: {e}")))?;
    let records = pool.install(|| {
        (0..plan.grid.len())
            .into_par_iter()
            .map(|i| {
                let outcome = catch_unwind(AssertUnwindSafe(|| run_point(plan, &hash, i)));
                match outcome {
                    Ok(Ok(r)) => {
                        log::info!("{} point {i} done in {:.1} s", plan.name, r.wall_clock_s);
                        r
                    }
                    Ok(Err(e)) => {
                        log::error!("{} point {i} failed: {e}", plan.name);
                        failed(plan, &hash, i, e.to_string())
                    }
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "unknown panic".into());
                        log::error!("{} point {i} panicked: {msg}", plan.name);
                        failed(plan, &hash, i, format!("panic: {msg}"))
                    }
                }
            })
            .collect()
    });
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workers_capped_by_memory() {
        assert_eq!(resolve_workers(Some(8), 4 << 30, 1 << 30), 4);
        assert_eq!(resolve_workers(Some(2), 4 << 30, 1 << 30), 2);
        assert_eq!(resolve_workers(Some(3), 0, 1 << 30), 1);
        assert!(resolve_workers(None, u64::MAX, 1) >= 1);
    }
}
