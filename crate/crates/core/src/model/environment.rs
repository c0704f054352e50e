//! Seeded random pieces of an instance: the environment graph and fields,
//! the system-environment coupling map and coupling fields.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{pauli_sum_to_operator, HermitianOperator};
use crate::pauli::{dot_sigma, dot_sigma_pair, PauliSum, QubitRegister};

/// Labels of the independent RNG streams derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    EnvFields = 2,
    CouplingMap = 3,
    CouplingFields = 4,
    SystemState = 5,
    EnvState = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub const COEFF_RANGE: (f64, f64) = (0.9, 1.1);

/// Attempts of the pairing model before giving up.
pub const GRAPH_RETRY_BUDGET: usize = 1000;

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn coefficient<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(COEFF_RANGE.0..=COEFF_RANGE.1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularGraph {
    pub n: usize,
    /// Sorted edges `(b, c)` with `b < c`.
    pub edges: Vec<(usize, usize)>,
    pub connected: bool,
    pub attempts: usize,
}

impl RegularGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(b, c)| b == v || c == v).count()
    }

    pub fn is_simple(&self) -> bool {
        let mut e = self.edges.clone();
        e.dedup();
        e.len() == self.edges.len() && self.edges.iter().all(|&(b, c)| b < c)
    }
}

/// Random simple 3-regular graph on `n` vertices by the pairing model,
/// rejecting draws with loops or repeated edges.
pub fn random_cubic_graph(n: usize, seed: u64) -> Result<RegularGraph> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::contract(format!(
            "a 3-regular graph needs an even vertex count of at least 4, got {n}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Graph);
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    for attempt in 1..=GRAPH_RETRY_BUDGET {
        points.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = points
            .chunks(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        let loops = edges.iter().any(|&(b, c)| b == c);
        let repeats = edges.windows(2).any(|w| w[0] == w[1]);
        if !loops && !repeats {
            let connected = is_connected(n, &edges);
            return Ok(RegularGraph {
                n,
                edges,
                connected,
                attempts: attempt,
            });
        }
    }
    Err(Error::numerical(format!(
        "no simple 3-regular graph on {n} vertices after {GRAPH_RETRY_BUDGET} attempts (seed {seed})"
    )))
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(b, c) in edges {
            let w = if b == v {
                c
            } else if c == v {
                b
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteField {
    pub site: usize,
    pub alpha: f64,
    pub n: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BondField {
    pub b: usize,
    pub c: usize,
    pub alpha: f64,
    pub m: [f64; 3],
    pub l: [f64; 3],
}

/// Every random number that enters `H_env`, in draw order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentDraws {
    pub sites: Vec<SiteField>,
    pub bonds: Vec<BondField>,
}

impl EnvironmentDraws {
    pub fn draw(graph: &RegularGraph, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::EnvFields);
        let sites = (0..graph.n)
            .map(|site| {
                let n = unit_vector(&mut rng);
                let alpha = coefficient(&mut rng);
                SiteField { site, alpha, n }
            })
            .collect();
        let bonds = graph
            .edges
            .iter()
            .map(|&(b, c)| {
                let m = unit_vector(&mut rng);
                let l = unit_vector(&mut rng);
                let alpha = coefficient(&mut rng);
                BondField { b, c, alpha, m, l }
            })
            .collect();
        Self { sites, bonds }
    }

    /// Multiply every coefficient by `f` (`f = 0` gives the zero operator).
    pub fn with_coefficients_scaled(mut self, f: f64) -> Self {
        self.sites.iter_mut().for_each(|s| s.alpha *= f);
        self.bonds.iter_mut().for_each(|b| b.alpha *= f);
        self
    }

    /// Pauli decomposition with environment qubit `j` at label `offset + j`.
    pub fn pauli_sum(&self, offset: usize) -> PauliSum {
        let mut sum = PauliSum::new();
        for s in &self.sites {
            sum.extend(dot_sigma(offset + s.site, s.n, s.alpha));
        }
        for b in &self.bonds {
            sum.extend(dot_sigma_pair(offset + b.b, b.m, offset + b.c, b.l, b.alpha));
        }
        sum
    }

    /// `H_env` on an environment-only register of `n_env` qubits.
    pub fn assemble(&self, n_env: usize) -> Result<HermitianOperator> {
        let reg = QubitRegister::new(0, n_env)?;
        pauli_sum_to_operator(&self.pauli_sum(0), &reg, true)
    }
}

#[derive(Clone, Debug)]
pub struct Environment {
    pub graph: RegularGraph,
    pub draws: EnvironmentDraws,
    /// Acts on the environment qubits only (dimension `2^n_env`).
    pub h_env: HermitianOperator,
}

pub fn build_environment(n_env: usize, seed: u64) -> Result<Environment> {
    let graph = random_cubic_graph(n_env, seed)?;
    let draws = EnvironmentDraws::draw(&graph, seed);
    let h_env = draws.assemble(n_env)?;
    Ok(Environment { graph, draws, h_env })
}

/// Injective map from each system qubit to a distinct environment qubit.
pub fn random_coupling_map(n_system: usize, n_env: usize, seed: u64) -> Result<Vec<usize>> {
    if n_system > n_env {
        return Err(Error::contract(format!(
            "{n_system} system qubits cannot couple to distinct qubits of a {n_env}-qubit environment"
        )));
    }
    let mut rng = stream_rng(seed, Stream::CouplingMap);
    let mut env: Vec<usize> = (0..n_env).collect();
    env.shuffle(&mut rng);
    env.truncate(n_system);
    Ok(env)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingField {
    pub system: usize,
    pub env: usize,
    pub beta: f64,
    pub n: [f64; 3],
    pub gamma: f64,
    pub m: [f64; 3],
    pub l: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingDraws {
    pub fields: Vec<CouplingField>,
}

impl CouplingDraws {
    pub fn draw(map: &[usize], seed: u64) -> Self {
        let mut rng = stream_rng(seed, Stream::CouplingFields);
        let fields = map
            .iter()
            .enumerate()
            .map(|(system, &env)| {
                let n = unit_vector(&mut rng);
                let beta = coefficient(&mut rng);
                let m = unit_vector(&mut rng);
                let l = unit_vector(&mut rng);
                let gamma = coefficient(&mut rng);
                CouplingField {
                    system,
                    env,
                    beta,
                    n,
                    gamma,
                    m,
                    l,
                }
            })
            .collect();
        Self { fields }
    }

    /// Scale every `gamma`; zero leaves pure system errors.
    pub fn with_env_coupling_scaled(mut self, f: f64) -> Self {
        self.fields.iter_mut().for_each(|c| c.gamma *= f);
        self
    }

    /// Terms of `V` whose system qubit lies in `systems`, labelled on `reg`.
    pub fn pauli_sum(&self, reg: &QubitRegister, systems: std::ops::Range<usize>) -> PauliSum {
        let mut sum = PauliSum::new();
        for c in self.fields.iter().filter(|c| systems.contains(&c.system)) {
            let w = reg.system(c.system);
            sum.extend(dot_sigma(w, c.n, c.beta));
            if reg.n_env() > 0 {
                sum.extend(dot_sigma_pair(w, c.m, reg.env(c.env), c.l, c.gamma));
            }
        }
        sum
    }
}

#[derive(Clone, Debug)]
pub struct Coupling {
    pub map: Vec<usize>,
    pub draws: CouplingDraws,
    pub pauli: PauliSum,
    pub v: HermitianOperator,
}

/// `V = sum_w beta_w (n_w . sigma^w) + sum_w gamma_w (m_w . sigma^w)(l_w . sigma^env(w))`.
pub fn build_coupling(reg: &QubitRegister, map: &[usize], seed: u64) -> Result<Coupling> {
    let draws = CouplingDraws::draw(map, seed);
    coupling_from_draws(reg, map, draws)
}

pub fn coupling_from_draws(
    reg: &QubitRegister,
    map: &[usize],
    draws: CouplingDraws,
) -> Result<Coupling> {
    if map.len() != reg.n_system() {
        return Err(Error::contract(format!(
            "coupling map covers {} system qubits, register has {}",
            map.len(),
            reg.n_system()
        )));
    }
    let mut seen = vec![false; reg.n_env()];
    for &e in map {
        if e >= reg.n_env() {
            return Err(Error::contract(format!("coupling map targets missing environment qubit {e}")));
        }
        if std::mem::replace(&mut seen[e], true) {
            return Err(Error::contract(format!(
                "coupling map is not injective: environment qubit {e} used twice"
            )));
        }
    }
    let pauli = draws.pauli_sum(reg, 0..reg.n_system());
    let v = pauli_sum_to_operator(&pauli, reg, true)?;
    Ok(Coupling {
        map: map.to_vec(),
        draws,
        pauli,
        v,
    })
}
