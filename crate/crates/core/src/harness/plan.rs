use serde::{Deserialize, Serialize};

use crate::analysis::ScanOptions;
use crate::error::{Error, Result};
use crate::model::{hash_json, ModelConfig, PauliTerm, ScheduleConfig, ScheduleKind, SystemStateConfig, SystemStateKind};
use crate::propagate::PropagatorSettings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    /// `points` times from `start` to `stop`, geometrically spaced.
    Log { start: f64, stop: f64, points: usize },
    Linear { start: f64, stop: f64, points: usize },
    Explicit { values: Vec<f64> },
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match *self {
            TimeGrid::Log { start, stop, points } => {
                if points == 1 {
                    return vec![start];
                }
                let (a, b) = (start.ln(), stop.ln());
                (0..points)
                    .map(|k| {
                        if k + 1 == points {
                            stop
                        } else {
                            (a + (b - a) * k as f64 / (points - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
            TimeGrid::Linear { start, stop, points } => {
                if points == 1 {
                    return vec![start];
                }
                (0..points)
                    .map(|k| {
                        if k + 1 == points {
                            stop
                        } else {
                            start + (stop - start) * k as f64 / (points - 1) as f64
                        }
                    })
                    .collect()
            }
            TimeGrid::Explicit { ref values } => values.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeGrid::Log { start, stop, points } if !(start > 0.0 && stop >= start && points >= 1) => {
                return Err(Error::validation("log time grid needs 0 < start <= stop and points >= 1"));
            }
            TimeGrid::Linear { start, stop, points } if !(start >= 0.0 && stop >= start && points >= 1) => {
                return Err(Error::validation("linear time grid needs 0 <= start <= stop and points >= 1"));
            }
            _ => {}
        }
        let t = self.times();
        if t.is_empty() {
            return Err(Error::validation("time grid is empty"));
        }
        if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation("time grid values must be finite and non-negative"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("time grid must be strictly increasing"));
        }
        Ok(())
    }

    /// Same grid with the point count multiplied by `scale` (at least 2 points).
    fn scaled(&self, scale: f64) -> Self {
        let shrink = |p: usize| ((p as f64 * scale).ceil() as usize).clamp(2.min(p), p);
        match *self {
            TimeGrid::Log { start, stop, points } => TimeGrid::Log {
                start,
                stop,
                points: shrink(points),
            },
            TimeGrid::Linear { start, stop, points } => TimeGrid::Linear {
                start,
                stop,
                points: shrink(points),
            },
            TimeGrid::Explicit { ref values } => TimeGrid::Explicit { values: values.clone() },
        }
    }
}

/// Overrides applied to the base config for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub e_penalty: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Replaces the base initial system state when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_system_state: Option<SystemStateConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// `F^2`, `F_s^2` and `<P>` on the time grid.
    Series,
    ProtectionTime,
    /// Average `F_s^2` over `long_term_times` against the dephasing prediction.
    LongTerm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectionSettings {
    pub threshold: f64,
    pub scan: ScanOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub base_config: ModelConfig,
    pub grid: Vec<GridPoint>,
    pub time_grid: TimeGrid,
    pub outputs: Vec<OutputKind>,
    pub settings: PropagatorSettings,
    pub protection: ProtectionSettings,
    pub long_term_times: Vec<f64>,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::validation("plan name must be non-empty and use [A-Za-z0-9_-]"));
        }
        if self.grid.is_empty() {
            return Err(Error::validation("plan grid is empty"));
        }
        if self.outputs.is_empty() {
            return Err(Error::validation("plan requests no outputs"));
        }
        self.time_grid.validate()?;
        self.settings.validate()?;
        for i in 0..self.grid.len() {
            self.config_for(i).validate().map_err(|e| {
                Error::validation(format!("grid point {i}: {e}"))
            })?;
        }
        if self.outputs.contains(&OutputKind::LongTerm) {
            let t = &self.long_term_times;
            if t.is_empty() || t.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::validation("long_term_times must be non-empty, finite and non-negative"));
            }
        }
        if self.outputs.contains(&OutputKind::ProtectionTime) {
            let p = &self.protection;
            if !(p.threshold > 0.0 && p.threshold < 1.0) {
                return Err(Error::validation("protection threshold must lie in (0, 1)"));
            }
            let s = &p.scan;
            if !(s.t_start > 0.0 && s.factor > 1.0 && s.t_max >= s.t_start && s.window >= 1 && s.rel_tol > 0.0) {
                return Err(Error::validation("invalid protection-time scan options"));
            }
        }
        if self.base_config.h_comp.kind != ScheduleKind::Constant
            && self.outputs.iter().any(|o| *o != OutputKind::Series)
        {
            return Err(Error::validation(
                "protection time and long-term outputs need a constant schedule",
            ));
        }
        Ok(())
    }

    /// The base config with grid point `i` applied.
    pub fn config_for(&self, i: usize) -> ModelConfig {
        let g = &self.grid[i];
        let mut cfg = self.base_config.clone();
        cfg.e_penalty = g.e_penalty;
        cfg.lambda = g.lambda;
        cfg.seed = g.seed;
        if let Some(s) = &g.initial_system_state {
            cfg.initial_system_state = s.clone();
        }
        cfg
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hash_json(self)
    }

    /// First 12 hex digits of [`Self::hash`], used in file names.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }
}

/// Knobs for the named plans.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanOptions {
    /// Fraction in `(0, 1]` of grid and time-grid points kept.
    pub scale: f64,
    /// Paper horizons (fig5 samples at 1e8, fig8 with T = 10000).
    pub full_scale: bool,
    pub seed: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            full_scale: false,
            seed: 1,
        }
    }
}

pub const PLAN_NAMES: [&str; 8] = ["fig1", "fig2", "fig3", "fig4a", "fig4b", "fig5", "fig7", "fig8"];

/// `|alpha|^2` of the single-instance figures, chosen so that
/// `|alpha|^4 + |beta|^4 = 0.615`.
pub const FIG1_ALPHA_SQ: f64 = 0.739_791_576_165_636;

/// Logical `[re, im]` coefficients of `alpha |+_L> + beta |-_L>`.
pub fn plus_minus_coeffs(alpha_sq: f64) -> Vec<[f64; 2]> {
    let a = alpha_sq.sqrt();
    let b = (1.0 - alpha_sq).sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![[h * (a + b), 0.0], [h * (a - b), 0.0]]
}

fn state(kind: SystemStateKind, coeffs: Vec<[f64; 2]>) -> SystemStateConfig {
    SystemStateConfig { kind, coeffs }
}

const SERIES_PENALTIES: [f64; 8] = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];

/// Keep `ceil(len * scale)` entries spread evenly, first and last included.
fn subsample<T: Clone>(items: &[T], scale: f64) -> Vec<T> {
    let n = items.len();
    let keep = ((n as f64 * scale).ceil() as usize).clamp(1, n);
    if keep == n {
        return items.to_vec();
    }
    if keep == 1 {
        return vec![items[n - 1].clone()];
    }
    (0..keep)
        .map(|k| items[(k * (n - 1) + (keep - 1) / 2) / (keep - 1)].clone())
        .collect()
}

/// Built-in plan for one of [`PLAN_NAMES`].
pub fn named_plan(name: &str, opts: &PlanOptions) -> Result<ExperimentPlan> {
    if !(opts.scale > 0.0 && opts.scale <= 1.0) {
        return Err(Error::validation("scale must lie in (0, 1]"));
    }
    let seed = opts.seed;
    let mut base = ModelConfig::paper_default(seed);
    base.initial_system_state = state(SystemStateKind::LogicalCoeffs, plus_minus_coeffs(FIG1_ALPHA_SQ));
    let series_grid = |lambda: f64, st: Option<SystemStateConfig>| -> Vec<GridPoint> {
        SERIES_PENALTIES
            .iter()
            .map(|&e_penalty| GridPoint {
                e_penalty,
                lambda,
                seed,
                initial_system_state: st.clone(),
            })
            .collect()
    };
    let log_grid = |stop: f64, points: usize| TimeGrid::Log { start: 0.1, stop, points };
    let protection = ProtectionSettings {
        threshold: 0.9,
        scan: ScanOptions::default(),
    };
    let long_term = |full: bool| -> Vec<f64> {
        let unit = if full { 1e8 } else { 1e5 };
        (1..=10).map(|k| k as f64 * unit).collect()
    };
    let series = vec![OutputKind::Series];
    let mut settings = PropagatorSettings::default();
    let (grid, time_grid, outputs) = match name {
        "fig1" => (series_grid(0.1, None), log_grid(1e3, 121), series),
        "fig2" => (series_grid(0.01, None), log_grid(1e5, 151), series),
        "fig3" => {
            let lambdas = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0];
            let mut g = Vec::new();
            for &lambda in &lambdas {
                for k in 0..20 {
                    g.push(GridPoint {
                        e_penalty: 35.0 + 10.0 * k as f64,
                        lambda,
                        seed,
                        initial_system_state: None,
                    });
                }
            }
            (g, TimeGrid::Explicit { values: vec![0.0] }, vec![OutputKind::ProtectionTime])
        }
        "fig4a" => (
            series_grid(0.1, Some(state(SystemStateKind::ZeroL, vec![]))),
            log_grid(1e6, 181),
            series,
        ),
        "fig4b" => (
            series_grid(0.1, Some(state(SystemStateKind::PlusL, vec![]))),
            log_grid(1e6, 181),
            series,
        ),
        "fig5" => {
            let g = (0..10)
                .map(|k| GridPoint {
                    e_penalty: 128.0,
                    lambda: 0.1,
                    seed: seed + k,
                    initial_system_state: Some(state(SystemStateKind::RandomCodespace, vec![])),
                })
                .collect();
            (g, TimeGrid::Explicit { values: vec![0.0] }, vec![OutputKind::LongTerm])
        }
        "fig7" => {
            let mut g = series_grid(0.1, None);
            g.extend(series_grid(0.1, Some(state(SystemStateKind::ZeroL, vec![]))));
            g.extend(series_grid(0.1, Some(state(SystemStateKind::PlusL, vec![]))));
            (g, log_grid(1e3, 121), series)
        }
        "fig8" => {
            let total = if opts.full_scale { 10_000.0 } else { 1_000.0 };
            let h = std::f64::consts::FRAC_1_SQRT_2;
            base.h_comp = ScheduleConfig {
                kind: ScheduleKind::LinearInterpolation,
                endpoints: vec![vec![PauliTerm::new(1.0, "X")], vec![PauliTerm::new(1.0, "Z")]],
                total_time: total,
            };
            base.initial_system_state = state(SystemStateKind::LogicalCoeffs, vec![[h, 0.0], [-h, 0.0]]);
            settings = PropagatorSettings::stepped();
            (
                series_grid(0.1, None),
                TimeGrid::Linear {
                    start: 0.0,
                    stop: total,
                    points: 101,
                },
                series,
            )
        }
        other => {
            return Err(Error::validation(format!(
                "unknown plan '{other}'; expected one of {}",
                PLAN_NAMES.join(", ")
            )))
        }
    };
    let grid = if name == "fig3" {
        // Thin each axis separately so every lambda cluster keeps its spread.
        let eps: Vec<f64> = (0..20).map(|k| 35.0 + 10.0 * k as f64).collect();
        let lams: Vec<f64> = grid.iter().map(|g| g.lambda).step_by(20).collect();
        let mut g = Vec::new();
        for lambda in subsample(&lams, opts.scale) {
            for e_penalty in subsample(&eps, opts.scale) {
                g.push(GridPoint {
                    e_penalty,
                    lambda,
                    seed,
                    initial_system_state: None,
                });
            }
        }
        g
    } else {
        subsample(&grid, opts.scale)
    };
    let plan = ExperimentPlan {
        name: name.to_string(),
        base_config: base,
        grid,
        time_grid: time_grid.scaled(opts.scale),
        outputs,
        settings,
        protection,
        long_term_times: long_term(opts.full_scale),
    };
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_plans_validate_and_hash_stably() {
        for name in PLAN_NAMES {
            let p = named_plan(name, &PlanOptions::default()).unwrap();
            assert_eq!(p.hash(), named_plan(name, &PlanOptions::default()).unwrap().hash());
            let back = ExperimentPlan::from_json(&serde_json::to_string(&p).unwrap()).unwrap();
            assert_eq!(back, p);
        }
        assert!(named_plan("fig6", &PlanOptions::default()).is_err());
    }

    #[test]
    fn grid_sizes() {
        let d = PlanOptions::default();
        assert_eq!(named_plan("fig1", &d).unwrap().grid.len(), 8);
        assert_eq!(named_plan("fig3", &d).unwrap().grid.len(), 180);
        let small = PlanOptions { scale: 0.25, ..d };
        let p = named_plan("fig3", &small).unwrap();
        assert_eq!(p.grid.len(), 3 * 5);
        assert_eq!(p.grid[0].e_penalty, 35.0);
        assert_eq!(p.grid.last().unwrap().e_penalty, 225.0);
    }

    #[test]
    fn fig1_state_gives_paper_prediction() {
        let a = FIG1_ALPHA_SQ;
        assert!((a * a + (1.0 - a).powi(2) - 0.615).abs() < 1e-12);
        let c = plus_minus_coeffs(a);
        assert!((c[0][0].powi(2) + c[1][0].powi(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_and_bad_times_rejected() {
        let mut p = named_plan("fig1", &PlanOptions::default()).unwrap();
        p.grid.clear();
        assert!(matches!(p.validate(), Err(Error::Validation(_))));
        let mut p = named_plan("fig1", &PlanOptions::default()).unwrap();
        p.time_grid = TimeGrid::Explicit { values: vec![1.0, 1.0] };
        assert!(matches!(p.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn grids_are_strictly_increasing() {
        let t = TimeGrid::Log { start: 0.1, stop: 1e3, points: 5 }.times();
        assert_eq!(t.len(), 5);
        assert_eq!(t[4], 1e3);
        assert!((t[1] - 1.0).abs() < 1e-12);
        assert!(subsample(&[1, 2, 3, 4, 5], 0.4) == vec![1, 5]);
    }
}
