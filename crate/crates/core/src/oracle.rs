//! Brute-force ground truth.
//!
//! Everything here enumerates; nothing samples. [`exhaustive_ground_state`]
//! walks all `2^n` states in Gray-code order with one incremental field
//! evaluation per step. [`maxcut_brute`] and [`coloring_exists`] work on the
//! graph directly and never touch an Ising model.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinState};
use crate::mapping::{encode_coloring, map_coloring, WeightedGraph};

/// Default enumeration cap for ground-state and max-cut search.
pub const ORACLE_MAX_SPINS: usize = 28;
/// Largest palette accepted by [`coloring_exists`].
pub const ORACLE_MAX_COLORS: usize = 4;
/// Absolute tolerance for membership in the ground-state set.
pub const ENERGY_TOLERANCE: f64 = 1e-9;
/// Ground states kept in an [`OracleResult`]; the count covers all of them.
pub const MAX_LISTED_GROUND_STATES: usize = 4096;

/// Running energy is recomputed from scratch this often to stop round-off creep.
const RESYNC_INTERVAL: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub min_energy: f64,
    /// Minimizers in enumeration-index order, at most [`MAX_LISTED_GROUND_STATES`].
    pub ground_states: Vec<SpinState>,
    pub ground_state_count: u64,
    pub states_scanned: u64,
}

fn capacity(what: &'static str, size: usize, limit: usize) -> Result<()> {
    if size > limit {
        Err(Error::Capacity { what, size, limit })
    } else {
        Ok(())
    }
}

#[derive(Default)]
struct MinTracker {
    best: f64,
    indices: Vec<u64>,
    count: u64,
}

impl MinTracker {
    fn new() -> Self {
        Self {
            best: f64::INFINITY,
            ..Self::default()
        }
    }

    fn offer(&mut self, energy: f64, index: u64) {
        if energy < self.best - ENERGY_TOLERANCE {
            self.best = energy;
            self.indices.clear();
            self.count = 0;
        }
        if (energy - self.best).abs() <= ENERGY_TOLERANCE {
            self.count += 1;
            if self.indices.len() < MAX_LISTED_GROUND_STATES {
                self.indices.push(index);
            }
        }
    }

    fn finish(mut self, model: &IsingModel, scanned: u64) -> OracleResult {
        self.indices.sort_unstable();
        let ground_states: Vec<SpinState> = self
            .indices
            .iter()
            .map(|&idx| SpinState::from_index(model.domain(), model.len(), idx))
            .collect();
        let min_energy = ground_states
            .iter()
            .map(|s| model.energy_of(s.values()))
            .fold(f64::INFINITY, f64::min);
        OracleResult {
            min_energy,
            ground_states,
            ground_state_count: self.count,
            states_scanned: scanned,
        }
    }
}

/// Global minimum of `model` by Gray-code enumeration, capped at [`ORACLE_MAX_SPINS`].
pub fn exhaustive_ground_state(model: &IsingModel) -> Result<OracleResult> {
    exhaustive_ground_state_with_limit(model, ORACLE_MAX_SPINS)
}

pub fn exhaustive_ground_state_with_limit(
    model: &IsingModel,
    max_spins: usize,
) -> Result<OracleResult> {
    let n = model.len();
    capacity("ground-state enumeration", n, max_spins.min(63))?;
    let mut state = SpinState::low(model.domain(), n);
    let mut energy = model.energy_of(state.values());
    let mut index = 0u64;
    let mut tracker = MinTracker::new();
    tracker.offer(energy, index);
    let total = 1u64 << n;
    for k in 1..total {
        let bit = k.trailing_zeros() as usize;
        energy += model.flip_delta_of(state.values(), bit);
        state.flip(bit);
        index ^= 1 << bit;
        if k % RESYNC_INTERVAL == 0 {
            energy = model.energy_of(state.values());
        }
        tracker.offer(energy, index);
    }
    Ok(tracker.finish(model, total))
}

/// Reference enumerator: full energy evaluation of every state in index order.
pub fn naive_ground_state(model: &IsingModel) -> Result<OracleResult> {
    let n = model.len();
    capacity("naive enumeration", n, ORACLE_MAX_SPINS)?;
    let mut tracker = MinTracker::new();
    let total = 1u64 << n;
    for idx in 0..total {
        let s = SpinState::from_index(model.domain(), n, idx);
        tracker.offer(model.energy_of(s.values()), idx);
    }
    Ok(tracker.finish(model, total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCut {
    pub weight: f64,
    /// Side of each vertex in one maximizing partition; vertex 0 is on side `false`.
    pub side: Vec<bool>,
}

/// Maximum cut by enumerating the `2^{n-1}` partitions with vertex 0 fixed.
pub fn maxcut_brute(graph: &WeightedGraph) -> Result<MaxCut> {
    let n = graph.n_vertices();
    capacity("max-cut enumeration", n, ORACLE_MAX_SPINS)?;
    let mut incident: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        incident[e.u].push((e.v, e.weight));
        incident[e.v].push((e.u, e.weight));
    }
    let mut side = vec![false; n];
    let mut cut = 0.0;
    let mut best = MaxCut {
        weight: 0.0,
        side: side.clone(),
    };
    for k in 1..1u64 << (n - 1) {
        let v = k.trailing_zeros() as usize + 1;
        for &(u, w) in &incident[v] {
            if side[u] == side[v] {
                cut += w;
            } else {
                cut -= w;
            }
        }
        side[v] = !side[v];
        if cut > best.weight + ENERGY_TOLERANCE {
            best.weight = cut;
            best.side.copy_from_slice(&side);
        }
    }
    best.weight = graph
        .edges()
        .iter()
        .filter(|e| best.side[e.u] != best.side[e.v])
        .map(|e| e.weight)
        .sum();
    Ok(best)
}

/// Proper coloring with `colors` colors by backtracking, if one exists.
pub fn coloring_exists(graph: &WeightedGraph, colors: usize) -> Result<Option<Vec<usize>>> {
    let n = graph.n_vertices();
    capacity("coloring search", n, ORACLE_MAX_SPINS)?;
    capacity("coloring palette", colors, ORACLE_MAX_COLORS)?;
    if colors == 0 {
        return Ok(None);
    }
    let adjacency = graph.adjacency();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| core::cmp::Reverse(adjacency[v].len()));
    let mut assignment = vec![usize::MAX; n];

    fn extend(
        depth: usize,
        order: &[usize],
        adjacency: &[Vec<usize>],
        colors: usize,
        assignment: &mut [usize],
    ) -> bool {
        let Some(&v) = order.get(depth) else {
            return true;
        };
        for c in 0..colors {
            if adjacency[v].iter().all(|&u| assignment[u] != c) {
                assignment[v] = c;
                if extend(depth + 1, order, adjacency, colors, assignment) {
                    return true;
                }
            }
        }
        assignment[v] = usize::MAX;
        false
    }

    Ok(extend(0, &order, &adjacency, colors, &mut assignment).then_some(assignment))
}

/// Certified optimum of the coloring QUBO built by [`map_coloring`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColoringOptimum {
    pub witness: Option<Vec<usize>>,
    /// `-A·N`, attained iff a proper coloring exists.
    pub lower_bound: f64,
    /// Energy of the encoded witness; equals the lower bound when present.
    pub optimum_energy: Option<f64>,
}

/// Optimum of the coloring model without enumerating its `2^{N·C}` states.
///
/// The model energy is a nonnegative penalty minus `A·N`, so `-A·N` is a lower
/// bound that a proper coloring attains.
pub fn coloring_optimum(
    graph: &WeightedGraph,
    colors: usize,
    scale: f64,
) -> Result<ColoringOptimum> {
    let witness = coloring_exists(graph, colors)?;
    let lower_bound = -scale * graph.n_vertices() as f64;
    let optimum_energy = match &witness {
        Some(w) => {
            let model = map_coloring(graph, colors, scale)?;
            Some(model.energy(&encode_coloring(colors, w)?)?)
        }
        None => None,
    };
    Ok(ColoringOptimum {
        witness,
        lower_bound,
        optimum_energy,
    })
}
