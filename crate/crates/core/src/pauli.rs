//! Pauli strings over a labelled qubit register.
//!
//! Basis convention used everywhere in this crate: qubit 0 is the most
//! significant bit of a computational-basis index. For a register of `n`
//! qubits, qubit `q` corresponds to bit `n - 1 - q`, so `|q0 q1 ... q(n-1)>`
//! reads left to right exactly as the ket is written.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Single-qubit product `self * other = phase * result`.
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
            (X, Y) => (I_UNIT, Z),
            (Y, X) => (-I_UNIT, Z),
            (Y, Z) => (I_UNIT, X),
            (Z, Y) => (-I_UNIT, X),
            (Z, X) => (I_UNIT, Y),
            (X, Z) => (-I_UNIT, Y),
        }
    }

    /// Row-major 2x2 matrix.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        match self {
            Pauli::I => [[ONE, z], [z, ONE]],
            Pauli::X => [[z, ONE], [ONE, z]],
            Pauli::Y => [[z, -I], [I, z]],
            Pauli::Z => [[ONE, z], [z, -ONE]],
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn signs(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

// `Pauli::I` shadows the imaginary unit inside `mul`.
const I_UNIT: Complex64 = I;

/// Qubit register split into an encoded system block followed by an
/// environment block. Global qubit labels are `0..n_total`; system qubits
/// come first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRegister {
    n_system: usize,
    n_env: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitLabel {
    System(usize),
    Env(usize),
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitLabel::System(i) => write!(f, "s{i}"),
            QubitLabel::Env(i) => write!(f, "e{i}"),
        }
    }
}

/// Largest register we will materialize operators on.
pub const MAX_QUBITS: usize = 24;

impl QubitRegister {
    pub fn new(n_system: usize, n_env: usize) -> Result<Self> {
        if n_system + n_env == 0 {
            return Err(Error::contract("register must contain at least one qubit"));
        }
        if n_system + n_env > MAX_QUBITS {
            return Err(Error::contract(format!(
                "register of {} qubits exceeds the supported maximum of {MAX_QUBITS}",
                n_system + n_env
            )));
        }
        Ok(Self { n_system, n_env })
    }

    /// Register with no environment block.
    pub fn system_only(n_system: usize) -> Result<Self> {
        Self::new(n_system, 0)
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn n_total(&self) -> usize {
        self.n_system + self.n_env
    }

    pub fn dim(&self) -> usize {
        1 << self.n_total()
    }

    pub fn system_dim(&self) -> usize {
        1 << self.n_system
    }

    pub fn env_dim(&self) -> usize {
        1 << self.n_env
    }

    /// Global label of system qubit `i`.
    pub fn system(&self, i: usize) -> usize {
        debug_assert!(i < self.n_system);
        i
    }

    /// Global label of environment qubit `j`.
    pub fn env(&self, j: usize) -> usize {
        debug_assert!(j < self.n_env);
        self.n_system + j
    }

    pub fn label(&self, q: usize) -> Option<QubitLabel> {
        if q < self.n_system {
            Some(QubitLabel::System(q))
        } else if q < self.n_total() {
            Some(QubitLabel::Env(q - self.n_system))
        } else {
            None
        }
    }

    pub fn labels(&self) -> Vec<QubitLabel> {
        (0..self.n_total()).filter_map(|q| self.label(q)).collect()
    }

    pub fn is_system(&self, q: usize) -> bool {
        q < self.n_system
    }

    /// Bit mask selecting qubit `q` inside a basis index.
    pub fn bit(&self, q: usize) -> usize {
        1 << (self.n_total() - 1 - q)
    }
}

/// `coefficient * P_{q1} P_{q2} ...`; labels absent from `factors` act as identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: Complex64,
    factors: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn identity(coefficient: impl Into<Complex64>) -> Self {
        Self {
            coefficient: coefficient.into(),
            factors: BTreeMap::new(),
        }
    }

    pub fn new(
        coefficient: impl Into<Complex64>,
        factors: impl IntoIterator<Item = (usize, Pauli)>,
    ) -> Self {
        let mut s = Self::identity(coefficient);
        for (q, p) in factors {
            // Repeated labels multiply in order.
            let cur = s.get(q);
            let (phase, prod) = cur.mul(p);
            s.coefficient *= phase;
            s.set(q, prod);
        }
        s
    }

    pub fn single(q: usize, p: Pauli, coefficient: impl Into<Complex64>) -> Self {
        Self::new(coefficient, [(q, p)])
    }

    /// Parse a dense string such as `"XIZY"`: character `k` acts on label `offset + k`.
    pub fn from_dense(coefficient: impl Into<Complex64>, ops: &str, offset: usize) -> Result<Self> {
        let mut factors = Vec::new();
        for (k, c) in ops.chars().enumerate() {
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::validation(format!("invalid Pauli character {c:?} in {ops:?}")))?;
            factors.push((offset + k, p));
        }
        Ok(Self::new(coefficient, factors))
    }

    fn set(&mut self, q: usize, p: Pauli) {
        if p == Pauli::I {
            self.factors.remove(&q);
        } else {
            self.factors.insert(q, p);
        }
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.factors.get(&q).copied().unwrap_or(Pauli::I)
    }

    /// Non-identity factors in ascending label order.
    pub fn factors(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.factors.iter().map(|(&q, &p)| (q, p))
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    pub fn max_label(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    pub fn scaled(&self, c: impl Into<Complex64>) -> Self {
        Self {
            coefficient: self.coefficient * c.into(),
            factors: self.factors.clone(),
        }
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.coefficient *= other.coefficient;
        for (q, p) in other.factors() {
            let (phase, prod) = out.get(q).mul(p);
            out.coefficient *= phase;
            out.set(q, prod);
        }
        out
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .factors()
            .filter(|&(q, p)| {
                let o = other.get(q);
                o != Pauli::I && o != p
            })
            .count();
        anti % 2 == 0
    }

    /// Number of non-identity factors whose label satisfies `pred`.
    pub fn weight_where(&self, pred: impl Fn(usize) -> bool) -> usize {
        self.factors.keys().filter(|&&q| pred(q)).count()
    }

    /// Same factors with labels mapped through `f`.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> PauliString {
        PauliString::new(self.coefficient, self.factors().map(|(q, p)| (f(q), p)))
    }

    /// Bit masks `(x, z)` on `reg` plus the number of `Y` factors. Column
    /// `b` maps to row `b ^ x` with sign `(-1)^{popcount(b & z)}` and phase
    /// `i^{n_y}`.
    pub(crate) fn masks(&self, reg: &QubitRegister) -> Result<(usize, usize, u32)> {
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, p) in self.factors() {
            if q >= reg.n_total() {
                return Err(Error::contract(format!(
                    "Pauli string references qubit {q} outside a {}-qubit register",
                    reg.n_total()
                )));
            }
            let b = reg.bit(q);
            if p.flips() {
                x |= b;
            }
            if p.signs() {
                z |= b;
            }
            if p == Pauli::Y {
                ny += 1;
            }
        }
        Ok((x, z, ny))
    }

    pub fn label_string(&self, reg: &QubitRegister) -> String {
        if self.factors.is_empty() {
            return "I".to_string();
        }
        self.factors()
            .map(|(q, p)| match reg.label(q) {
                Some(l) => format!("{}{}", p.as_char(), l),
                None => format!("{}{}", p.as_char(), q),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{:+}i)", self.coefficient.re, self.coefficient.im)?;
        if self.factors.is_empty() {
            return write!(f, " I");
        }
        for (q, p) in self.factors() {
            write!(f, " {}{}", p.as_char(), q)?;
        }
        Ok(())
    }
}

/// Formal sum of Pauli strings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = PauliString>) -> Self {
        Self {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn push(&mut self, s: PauliString) {
        self.terms.push(s);
    }

    pub fn extend(&mut self, other: PauliSum) {
        self.terms.extend(other.terms);
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: impl Into<Complex64> + Copy) -> PauliSum {
        PauliSum::from_terms(self.terms.iter().map(|t| t.scaled(c)))
    }

    /// True when every coefficient is real within `tol`.
    pub fn has_real_coefficients(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coefficient.im.abs() <= tol)
    }
}

/// `(n . sigma)` on qubit `q` for a real 3-vector `n`.
pub fn dot_sigma(q: usize, n: [f64; 3], scale: f64) -> PauliSum {
    PauliSum::from_terms(
        Pauli::NONTRIVIAL
            .iter()
            .zip(n)
            .filter(|(_, c)| *c != 0.0)
            .map(|(&p, c)| PauliString::single(q, p, scale * c)),
    )
}

/// `scale * (m . sigma^a) (l . sigma^b)` for distinct qubits `a`, `b`.
pub fn dot_sigma_pair(a: usize, m: [f64; 3], b: usize, l: [f64; 3], scale: f64) -> PauliSum {
    let mut out = PauliSum::new();
    for (&pa, ma) in Pauli::NONTRIVIAL.iter().zip(m) {
        for (&pb, lb) in Pauli::NONTRIVIAL.iter().zip(l) {
            let c = scale * ma * lb;
            if c != 0.0 {
                out.push(PauliString::new(c, [(a, pa), (b, pb)]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        c
    }

    #[test]
    fn single_qubit_product_table_matches_matrices() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (phase, p) = a.mul(b);
                let lhs = mat_mul(a.matrix(), b.matrix());
                let rhs = p.matrix();
                for i in 0..2 {
                    for j in 0..2 {
                        assert_eq!(lhs[i][j], phase * rhs[i][j], "{a:?}*{b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn anticommutator_is_twice_delta() {
        for a in Pauli::NONTRIVIAL {
            for b in Pauli::NONTRIVIAL {
                let ab = mat_mul(a.matrix(), b.matrix());
                let ba = mat_mul(b.matrix(), a.matrix());
                for i in 0..2 {
                    for j in 0..2 {
                        let expect = if a == b && i == j { 2.0 } else { 0.0 };
                        assert_eq!(ab[i][j] + ba[i][j], Complex64::new(expect, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn string_product_and_commutation() {
        let xy = PauliString::new(1.0, [(0, Pauli::X), (1, Pauli::Y)]);
        let zz = PauliString::new(1.0, [(0, Pauli::Z), (1, Pauli::Z)]);
        // XZ = -iY, YZ = iX  =>  (-i)(i) = 1
        let p = xy.mul(&zz);
        assert_eq!(p.coefficient, Complex64::new(1.0, 0.0));
        assert_eq!(p.get(0), Pauli::Y);
        assert_eq!(p.get(1), Pauli::X);
        assert!(xy.commutes_with(&zz));
        assert!(!PauliString::single(0, Pauli::X, 1.0).commutes_with(&zz));
    }

    #[test]
    fn repeated_labels_collapse() {
        let s = PauliString::new(1.0, [(2, Pauli::X), (2, Pauli::X)]);
        assert_eq!(s.weight(), 0);
        assert_eq!(s.coefficient, ONE);
    }

    #[test]
    fn dense_parse_round_trip() {
        let s = PauliString::from_dense(0.5, "XIZ", 0).unwrap();
        assert_eq!(s.weight(), 2);
        assert_eq!(s.get(2), Pauli::Z);
        assert!(PauliString::from_dense(1.0, "XQ", 0).is_err());
    }

    #[test]
    fn register_labels_and_bits() {
        let reg = QubitRegister::new(4, 2).unwrap();
        assert_eq!(reg.dim(), 64);
        assert_eq!(reg.env(1), 5);
        assert_eq!(reg.bit(0), 32);
        assert_eq!(reg.bit(5), 1);
        assert_eq!(reg.label(4), Some(QubitLabel::Env(0)));
        assert_eq!(reg.labels().len(), 6);
        assert!(QubitRegister::new(0, 0).is_err());
    }
}
