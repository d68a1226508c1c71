//! Ising / QUBO models over binary spins.
//!
//! The energy convention is `H = -Σ_{i<j} J_ij s_i s_j - Σ_i h_i s_i`, with each
//! pair counted once. Couplings are stored sparsely as an upper-triangle list
//! plus a per-row neighbor table for local-field evaluation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::math::{exp, sigmoid};

/// Largest model accepted by [`IsingModel::exact_boltzmann`].
pub const BOLTZMANN_MAX_SPINS: usize = 20;

/// The value set a spin ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinDomain {
    /// Ising spins `s ∈ {-1, +1}`.
    PlusMinusOne,
    /// QUBO variables `s ∈ {0, 1}`.
    ZeroOne,
}

impl SpinDomain {
    #[inline]
    pub fn high(self) -> i8 {
        1
    }

    #[inline]
    pub fn low(self) -> i8 {
        match self {
            SpinDomain::PlusMinusOne => -1,
            SpinDomain::ZeroOne => 0,
        }
    }

    #[inline]
    pub fn contains(self, value: i8) -> bool {
        value == self.high() || value == self.low()
    }

    /// `high - low`: 2 for Ising spins, 1 for QUBO variables.
    #[inline]
    pub fn span(self) -> f64 {
        f64::from(self.high() - self.low())
    }

    /// Inverse temperature of the Boltzmann law sampled by a Gibbs update that
    /// sets a spin high with probability `σ(gain · f_i)`.
    ///
    /// The exact conditional is `σ(β · span · f_i)`, so `β = gain / span`.
    pub fn boltzmann_beta(self, gain: f64) -> f64 {
        gain / self.span()
    }
}

/// One upper-triangle coupling `J_ij` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// A spin configuration tagged with its domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinState {
    domain: SpinDomain,
    values: Vec<i8>,
}

impl SpinState {
    pub fn new(domain: SpinDomain, values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|&v| !domain.contains(v)) {
            return Err(invalid(
                "state",
                alloc::format!(
                    "value {} at index {bad} is not a {domain:?} spin",
                    values[bad]
                ),
            ));
        }
        Ok(Self { domain, values })
    }

    /// All spins low.
    pub fn low(domain: SpinDomain, n: usize) -> Self {
        Self {
            domain,
            values: vec![domain.low(); n],
        }
    }

    /// State whose spin `i` is high iff bit `i` of `index` is set.
    pub fn from_index(domain: SpinDomain, n: usize, index: u64) -> Self {
        let values = (0..n)
            .map(|i| {
                if index >> i & 1 == 1 {
                    domain.high()
                } else {
                    domain.low()
                }
            })
            .collect();
        Self { domain, values }
    }

    /// Inverse of [`SpinState::from_index`]; only meaningful for `n ≤ 64`.
    pub fn to_index(&self) -> u64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == self.domain.high())
            .fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    pub fn random<R: Rng + ?Sized>(domain: SpinDomain, n: usize, rng: &mut R) -> Self {
        let values = (0..n)
            .map(|_| {
                if rng.random::<bool>() {
                    domain.high()
                } else {
                    domain.low()
                }
            })
            .collect();
        Self { domain, values }
    }

    #[inline]
    pub fn domain(&self) -> SpinDomain {
        self.domain
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.values[i]
    }

    #[inline]
    pub fn is_high(&self, i: usize) -> bool {
        self.values[i] == self.domain.high()
    }

    #[inline]
    pub fn set_high(&mut self, i: usize, high: bool) {
        self.values[i] = if high {
            self.domain.high()
        } else {
            self.domain.low()
        };
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let high = self.is_high(i);
        self.set_high(i, !high);
    }
}

/// Sparse symmetric Ising model with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    domain: SpinDomain,
    bias: Vec<f64>,
    couplings: Vec<Coupling>,
    row_offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl IsingModel {
    /// Builds a model from biases and couplings given in either orientation.
    ///
    /// Zero couplings are dropped. A pair listed twice (in any orientation) is an
    /// error, as is a self-coupling or a non-finite coefficient.
    pub fn new(
        domain: SpinDomain,
        bias: Vec<f64>,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = bias.len();
        if n == 0 {
            return Err(invalid("n", "a model needs at least one spin"));
        }
        if let Some(i) = bias.iter().position(|h| !h.is_finite()) {
            return Err(invalid("h", alloc::format!("bias {i} is not finite")));
        }
        let mut upper = BTreeMap::new();
        for (a, b, value) in couplings {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    len: n,
                });
            }
            if a == b {
                return Err(invalid("J", alloc::format!("self-coupling at {a}")));
            }
            if !value.is_finite() {
                return Err(invalid("J", alloc::format!("J[{a}][{b}] is not finite")));
            }
            let key = (a.min(b), a.max(b));
            if upper.insert(key, value).is_some() {
                return Err(invalid(
                    "J",
                    alloc::format!("duplicate coupling ({}, {})", key.0, key.1),
                ));
            }
        }
        let couplings: Vec<Coupling> = upper
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), value)| Coupling { i, j, value })
            .collect();

        let mut degree = vec![0usize; n];
        for c in &couplings {
            degree[c.i] += 1;
            degree[c.j] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        for d in &degree {
            row_offsets.push(row_offsets.last().unwrap() + d);
        }
        let mut cursor = row_offsets[..n].to_vec();
        let mut neighbors = vec![(0usize, 0.0f64); row_offsets[n]];
        for c in &couplings {
            neighbors[cursor[c.i]] = (c.j, c.value);
            cursor[c.i] += 1;
            neighbors[cursor[c.j]] = (c.i, c.value);
            cursor[c.j] += 1;
        }
        for i in 0..n {
            neighbors[row_offsets[i]..row_offsets[i + 1]].sort_by_key(|&(j, _)| j);
        }

        Ok(Self {
            domain,
            bias,
            couplings,
            row_offsets,
            neighbors,
        })
    }

    /// Model with no couplings and zero bias.
    pub fn zeros(domain: SpinDomain, n: usize) -> Result<Self> {
        Self::new(domain, vec![0.0; n], core::iter::empty())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bias.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bias.is_empty()
    }

    #[inline]
    pub fn domain(&self) -> SpinDomain {
        self.domain
    }

    #[inline]
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Nonzero upper-triangle couplings, sorted by `(i, j)`.
    #[inline]
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Nonzero couplings of row `i` as `(j, J_ij)`, sorted by `j`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// `J_ij`, zero for absent pairs and on the diagonal.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let row = self.neighbors(i);
        row.binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| row[pos].1)
            .unwrap_or(0.0)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Fraction of zero entries in the dense `n × n` coupling matrix (diagonal included).
    pub fn zero_coupling_fraction(&self) -> f64 {
        let n = self.len() as f64;
        1.0 - (2 * self.couplings.len()) as f64 / (n * n)
    }

    fn check_state(&self, state: &SpinState) -> Result<()> {
        if state.domain() != self.domain {
            return Err(Error::DomainMismatch {
                model: self.domain,
                state: state.domain(),
            });
        }
        check_len("state length", self.len(), state.len())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
        }
    }

    /// `H(s)`.
    pub fn energy(&self, state: &SpinState) -> Result<f64> {
        self.check_state(state)?;
        Ok(self.energy_of(state.values()))
    }

    pub(crate) fn energy_of(&self, s: &[i8]) -> f64 {
        let pair: f64 = self
            .couplings
            .iter()
            .map(|c| c.value * f64::from(s[c.i]) * f64::from(s[c.j]))
            .sum();
        let field: f64 = self
            .bias
            .iter()
            .zip(s)
            .map(|(h, &v)| h * f64::from(v))
            .sum();
        -pair - field
    }

    /// Local field `f_i = Σ_j J_ij s_j + h_i`.
    pub fn local_field(&self, state: &SpinState, i: usize) -> Result<f64> {
        self.check_state(state)?;
        self.check_index(i)?;
        Ok(self.field_of(state.values(), i))
    }

    #[inline]
    pub(crate) fn field_of(&self, s: &[i8], i: usize) -> f64 {
        self.neighbors(i)
            .iter()
            .map(|&(j, v)| v * f64::from(s[j]))
            .sum::<f64>()
            + self.bias[i]
    }

    /// Energy change caused by moving spin `i` to its other value.
    ///
    /// Equals `2 s_i f_i` for Ising spins; `-f_i` for a 0→1 toggle and `+f_i`
    /// for 1→0 in the QUBO domain.
    pub fn flip_delta(&self, state: &SpinState, i: usize) -> Result<f64> {
        self.check_state(state)?;
        self.check_index(i)?;
        Ok(self.flip_delta_of(state.values(), i))
    }

    #[inline]
    pub(crate) fn flip_delta_of(&self, s: &[i8], i: usize) -> f64 {
        let old = s[i];
        let new = if old == self.domain.high() {
            self.domain.low()
        } else {
            self.domain.high()
        };
        -f64::from(new - old) * self.field_of(s, i)
    }

    /// Gibbs conditional `P(s_i = high | rest)` at inverse temperature `beta`.
    ///
    /// `σ(2β f_i)` for Ising spins and `σ(β f_i)` for QUBO variables.
    pub fn conditional_high_probability(
        &self,
        state: &SpinState,
        i: usize,
        beta: f64,
    ) -> Result<f64> {
        check_beta(beta)?;
        let field = self.local_field(state, i)?;
        Ok(sigmoid(beta * self.domain.span() * field))
    }

    /// Exact Boltzmann distribution `P(s) ∝ exp(-β H(s))` over all `2^n` states.
    pub fn exact_boltzmann(&self, beta: f64) -> Result<BoltzmannTable> {
        check_beta(beta)?;
        let n = self.len();
        if n > BOLTZMANN_MAX_SPINS {
            return Err(Error::Capacity {
                what: "exact Boltzmann enumeration",
                size: n,
                limit: BOLTZMANN_MAX_SPINS,
            });
        }
        let energies: Vec<f64> = (0..1u64 << n)
            .map(|idx| self.energy_of(SpinState::from_index(self.domain, n, idx).values()))
            .collect();
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let mut probs: Vec<f64> = energies.iter().map(|&e| exp(-beta * (e - e_min))).collect();
        let z: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= z;
        }
        Ok(BoltzmannTable {
            domain: self.domain,
            n,
            probs,
        })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid("beta", "must be finite and nonnegative"))
    }
}

/// Probabilities of every configuration, indexed as in [`SpinState::from_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannTable {
    domain: SpinDomain,
    n: usize,
    probs: Vec<f64>,
}

impl BoltzmannTable {
    pub fn domain(&self) -> SpinDomain {
        self.domain
    }

    pub fn spins(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, state: &SpinState) -> f64 {
        self.probs[state.to_index() as usize]
    }

    /// `P(s_i = high)`.
    pub fn marginal_high(&self, i: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx >> i & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// Total-variation distance to the empirical distribution given by `counts`.
    pub fn total_variation_from_counts(&self, counts: &[u64]) -> Result<f64> {
        check_len("histogram bins", self.probs.len(), counts.len())?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(invalid("counts", "empty histogram"));
        }
        let total = total as f64;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(counts)
                .map(|(p, &c)| (p - c as f64 / total).abs())
                .sum::<f64>())
    }
}
