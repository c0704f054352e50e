use super::{
    diagonalize, evolve_stepped_series, Method, PropagatorSettings, ScheduledOperator, SpectralEvolver,
    SpectralForm, TimeDependentHamiltonian, DENSE_LIMIT,
};
use crate::error::{Error, Result};
use crate::model::ModelInstance;
use crate::operator::HermitianOperator;
use crate::state::StateVector;

/// `|Q~ psi|` above which a state counts as outside the codespace.
pub const CODESPACE_TOL: f64 = 1e-10;

enum Evolution {
    Spectral(SpectralForm),
    Stepped(Box<dyn TimeDependentHamiltonian + Send + Sync>),
}

impl Evolution {
    fn constant(h: &HermitianOperator, spectral: bool) -> Result<Self> {
        if spectral && h.dim() <= DENSE_LIMIT {
            Ok(Evolution::Spectral(diagonalize(h)?))
        } else {
            Ok(Evolution::Stepped(Box::new(h.clone())))
        }
    }

    fn series(&self, s: &StateVector, times: &[f64], settings: &PropagatorSettings) -> Result<Vec<StateVector>> {
        match self {
            Evolution::Spectral(sf) => {
                let ev = sf.evolver(s)?;
                times.iter().map(|&t| ev.at(t)).collect()
            }
            Evolution::Stepped(h) => Ok(evolve_stepped_series(h.as_ref(), s, 0.0, times, settings)?.0),
        }
    }

    fn spectral(&self) -> Option<&SpectralForm> {
        match self {
            Evolution::Spectral(sf) => Some(sf),
            Evolution::Stepped(_) => None,
        }
    }
}

/// `phi(t) = U(t) psi` and the factors of `phi_0(t) = U_0(t) psi` on one grid.
#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<StateVector>,
    pub phi0_system: Vec<StateVector>,
    pub phi0_env: Vec<StateVector>,
}

impl PairTrajectory {
    pub fn phi0(&self, k: usize) -> StateVector {
        self.phi0_system[k].kron(&self.phi0_env[k])
    }
}

/// Propagators for one instance: the full `H(t)`, and `H_0` split into its
/// system part `H_comp^L(t)` and environment part `H_env`.
pub struct InstancePropagator<'a> {
    inst: &'a ModelInstance,
    settings: PropagatorSettings,
    full: Evolution,
    system: Evolution,
    env: Evolution,
}

impl<'a> InstancePropagator<'a> {
    pub fn new(inst: &'a ModelInstance, settings: PropagatorSettings) -> Result<Self> {
        settings.validate()?;
        let spectral = settings.method == Method::Spectral && inst.is_time_independent();
        let full = if spectral {
            Evolution::Spectral(diagonalize(&inst.hamiltonian_at(0.0)?)?)
        } else {
            Evolution::Stepped(Box::new(inst.hamiltonian()?))
        };
        let system = if inst.is_time_independent() {
            Evolution::constant(&inst.h0_system_at(0.0)?, true)?
        } else {
            let sched = &inst.schedule;
            Evolution::Stepped(Box::new(ScheduledOperator::new(
                HermitianOperator::zeros(inst.reg.system_dim()),
                sched.encoded.clone(),
                sched.kind,
                sched.total_time,
            )?))
        };
        let env = Evolution::constant(inst.h_env(), true)?;
        Ok(Self {
            inst,
            settings,
            full,
            system,
            env,
        })
    }

    pub fn instance(&self) -> &ModelInstance {
        self.inst
    }

    pub fn settings(&self) -> &PropagatorSettings {
        &self.settings
    }

    /// Spectral form of the full Hamiltonian, when the spectral method is in use.
    pub fn full_spectral(&self) -> Option<&SpectralForm> {
        self.full.spectral()
    }

    pub fn system_spectral(&self) -> Option<&SpectralForm> {
        self.system.spectral()
    }

    pub fn env_spectral(&self) -> Option<&SpectralForm> {
        self.env.spectral()
    }

    /// Both trajectories from `psi_s ⊗ psi_e` on `times` (ascending, from 0).
    /// With `require_codespace` the initial state must satisfy `P psi = psi`.
    pub fn trajectory(
        &self,
        psi_s: &StateVector,
        psi_e: &StateVector,
        times: &[f64],
        require_codespace: bool,
    ) -> Result<PairTrajectory> {
        let psi = psi_s.kron(psi_e);
        if require_codespace {
            check_codespace(self.inst, &psi)?;
        }
        Ok(PairTrajectory {
            times: times.to_vec(),
            phi: self.full.series(&psi, times, &self.settings)?,
            phi0_system: self.system.series(psi_s, times, &self.settings)?,
            phi0_env: self.env.series(psi_e, times, &self.settings)?,
        })
    }

    /// Point evaluator for time-independent instances; every time costs
    /// `O(dim^2)` regardless of its size.
    pub fn prepare(&self, psi_s: &StateVector, psi_e: &StateVector) -> Result<PreparedPair<'_>> {
        let (Some(full), Some(sys), Some(env)) = (self.full.spectral(), self.system.spectral(), self.env.spectral())
        else {
            return Err(Error::contract(
                "point evaluation needs a time-independent instance and the spectral method",
            ));
        };
        Ok(PreparedPair {
            full: full.evolver(&psi_s.kron(psi_e))?,
            system: sys.evolver(psi_s)?,
            env: env.evolver(psi_e)?,
        })
    }
}

pub struct PreparedPair<'a> {
    full: SpectralEvolver<'a>,
    system: SpectralEvolver<'a>,
    env: SpectralEvolver<'a>,
}

impl PreparedPair<'_> {
    /// `(phi(t), phi_0^s(t), phi_0^e(t))`
    pub fn at(&self, t: f64) -> Result<(StateVector, StateVector, StateVector)> {
        Ok((self.full.at(t)?, self.system.at(t)?, self.env.at(t)?))
    }
}

pub(crate) fn check_codespace(inst: &ModelInstance, psi: &StateVector) -> Result<()> {
    let leak = inst.fam.penalty_q.apply(psi)?.norm();
    if !(leak <= CODESPACE_TOL) {
        return Err(Error::contract(format!(
            "initial state is outside the codespace: |Q~ psi| = {leak:e}"
        )));
    }
    Ok(())
}

/// Convenience wrapper: build the propagators and return the trajectory
/// from the instance's own initial state.
pub fn evolve_pair(
    inst: &ModelInstance,
    times: &[f64],
    settings: &PropagatorSettings,
) -> Result<PairTrajectory> {
    let prop = InstancePropagator::new(inst, settings.clone())?;
    prop.trajectory(&inst.psi_system, &inst.psi_env, times, true)
}
