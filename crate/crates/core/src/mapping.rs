//! Problem encodings: weighted MAX-CUT and graph coloring to Ising form, and
//! lowering of Ising coefficients onto crossbar conductances.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::device::{ConductanceMap, Polarity};
use crate::error::{check_len, invalid, Error, Result};
use crate::ising::{IsingModel, SpinDomain, SpinState};

/// Relative tolerance used when matching `|J| × G_scale` to a conductance level.
const LEVEL_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n_vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::EmptyGraph("a graph needs at least one vertex"));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.u >= n_vertices || e.v >= n_vertices {
                return Err(Error::IndexOutOfRange {
                    index: e.u.max(e.v),
                    len: n_vertices,
                });
            }
            if e.u == e.v {
                return Err(invalid(
                    "edges",
                    alloc::format!("self-loop at vertex {}", e.u),
                ));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(invalid(
                    "edges",
                    alloc::format!("edge ({}, {}) has weight {}", e.u, e.v, e.weight),
                ));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(invalid(
                    "edges",
                    alloc::format!("duplicate edge ({}, {})", e.u, e.v),
                ));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// Unit-weight graph from vertex pairs.
    pub fn unweighted(n_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            n_vertices,
            pairs
                .iter()
                .map(|&(u, v)| Edge { u, v, weight: 1.0 })
                .collect(),
        )
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        adj
    }
}

/// Weighted MAX-CUT as an Ising model: `J_uv = −A W_uv`, `h = 0`.
///
/// With this encoding `cut(s) = (Σ W − H(s)/A) / 2`.
pub fn map_maxcut(graph: &WeightedGraph, scale: f64) -> Result<IsingModel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("A", "scale factor must be positive"));
    }
    if graph.edges().is_empty() {
        return Err(Error::EmptyGraph("MAX-CUT needs at least one edge"));
    }
    IsingModel::new(
        SpinDomain::PlusMinusOne,
        vec![0.0; graph.n_vertices()],
        graph.edges().iter().map(|e| (e.u, e.v, -scale * e.weight)),
    )
}

/// Spin index of the one-hot variable "vertex `v` has color `k`" (both 0-based).
#[inline]
pub fn coloring_spin(colors: usize, vertex: usize, color: usize) -> usize {
    colors * vertex + color
}

/// Graph `C`-coloring as a QUBO in Ising notation.
///
/// `J = −2A` between distinct colors of one vertex and between equal colors of
/// adjacent vertices, `h = A` everywhere. Edge weights are ignored. The model
/// energy equals the penalty `A Σ_v (1 − Σ_k s_vk)² + A Σ_E Σ_k s_uk s_vk` minus
/// the constant `A N`.
pub fn map_coloring(graph: &WeightedGraph, colors: usize, scale: f64) -> Result<IsingModel> {
    if colors < 2 {
        return Err(invalid("C", "need at least two colors"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("A", "scale factor must be positive"));
    }
    let n = graph.n_vertices();
    let mut couplings = Vec::new();
    for v in 0..n {
        for k in 0..colors {
            for c in k + 1..colors {
                couplings.push((
                    coloring_spin(colors, v, k),
                    coloring_spin(colors, v, c),
                    -2.0 * scale,
                ));
            }
        }
    }
    for e in graph.edges() {
        for k in 0..colors {
            couplings.push((
                coloring_spin(colors, e.u, k),
                coloring_spin(colors, e.v, k),
                -2.0 * scale,
            ));
        }
    }
    IsingModel::new(SpinDomain::ZeroOne, vec![scale; n * colors], couplings)
}

/// How coefficient magnitudes are matched to conductance levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quantization {
    /// Every `|J| × G_scale` must land on a level.
    #[default]
    Exact,
    /// Snap to the nearest level.
    Nearest,
}

/// An Ising model laid out on a crossbar.
///
/// Row `i` computes spin `i`'s field. Columns `0..n` carry the spins; the bias
/// column, when present, is column `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarLowering {
    pub conductance_targets: ConductanceMap,
    pub column_polarity: Vec<Polarity>,
    /// µS per unit of dimensionless coefficient.
    pub g_scale_us: f64,
    pub bias_column: Option<usize>,
    pub spins: usize,
    pub domain: SpinDomain,
}

impl CrossbarLowering {
    /// Fraction of zero entries in the `n × n` coupling block.
    pub fn zero_coupling_fraction(&self) -> f64 {
        let n = self.spins;
        let zeros = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&(r, c)| self.conductance_targets.get(r, c) == 0.0)
            .count();
        zeros as f64 / (n * n) as f64
    }

    pub fn columns(&self) -> usize {
        self.conductance_targets.cols()
    }
}

fn column_polarity(values: impl Iterator<Item = f64>, column: usize) -> Result<Polarity> {
    let (mut pos, mut neg) = (false, false);
    for v in values {
        pos |= v > 0.0;
        neg |= v < 0.0;
    }
    match (pos, neg) {
        (true, true) => Err(Error::MixedSignColumn { column }),
        (false, true) => Ok(Polarity::Negative),
        _ => Ok(Polarity::Positive),
    }
}

/// Lowers `model` onto conductances `|coefficient| × g_scale_us`.
///
/// Every column must be sign-uniform, since a column has one read polarity.
pub fn to_crossbar(
    model: &IsingModel,
    levels_us: &[f64],
    g_scale_us: f64,
    quantization: Quantization,
) -> Result<CrossbarLowering> {
    if !(g_scale_us > 0.0 && g_scale_us.is_finite()) {
        return Err(invalid("G_scale", "must be positive"));
    }
    if levels_us.is_empty() || levels_us.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("levels", "need at least one positive level"));
    }
    let n = model.len();
    let has_bias = model.bias().iter().any(|&h| h != 0.0);
    let cols = n + usize::from(has_bias);

    let mut polarity = Vec::with_capacity(cols);
    for j in 0..n {
        polarity.push(column_polarity(
            model.neighbors(j).iter().map(|&(_, v)| v),
            j,
        )?);
    }
    if has_bias {
        polarity.push(column_polarity(model.bias().iter().copied(), n)?);
    }

    let mut targets = ConductanceMap::zeros(n, cols);
    let mut offenders = Vec::new();
    let mut place = |row: usize, col: usize, coefficient: f64| {
        let wanted = coefficient.abs() * g_scale_us;
        let nearest = levels_us
            .iter()
            .copied()
            .min_by(|a, b| (a - wanted).abs().total_cmp(&(b - wanted).abs()))
            .expect("nonempty levels");
        let exact = (nearest - wanted).abs() <= LEVEL_MATCH_RTOL * wanted.max(nearest);
        if exact || quantization == Quantization::Nearest {
            targets.set(row, col, nearest);
        } else {
            offenders.push((row, col, coefficient));
        }
    };
    for c in model.couplings() {
        place(c.i, c.j, c.value);
        place(c.j, c.i, c.value);
    }
    if has_bias {
        for (i, &h) in model.bias().iter().enumerate() {
            if h != 0.0 {
                place(i, n, h);
            }
        }
    }
    if !offenders.is_empty() {
        offenders.sort_by_key(|a| (a.0, a.1));
        return Err(Error::Quantization { offenders });
    }

    Ok(CrossbarLowering {
        conductance_targets: targets,
        column_polarity: polarity,
        g_scale_us,
        bias_column: has_bias.then_some(n),
        spins: n,
        domain: model.domain(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    /// `true` for vertices whose spin is `+1`.
    pub side: Vec<bool>,
    pub weight: f64,
}

/// Partition by spin sign and sum the weights of edges crossing it.
pub fn decode_cut(graph: &WeightedGraph, state: &SpinState) -> Result<CutResult> {
    check_len("state length", graph.n_vertices(), state.len())?;
    if state.domain() != SpinDomain::PlusMinusOne {
        return Err(invalid("state", "cuts are decoded from ±1 spins"));
    }
    let side: Vec<bool> = state.values().iter().map(|&s| s > 0).collect();
    let weight = graph
        .edges()
        .iter()
        .filter(|e| side[e.u] != side[e.v])
        .map(|e| e.weight)
        .sum();
    Ok(CutResult { side, weight })
}

/// Result of decoding a one-hot coloring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringReport {
    /// Color of each vertex when exactly one of its variables is set.
    pub colors: Vec<Option<usize>>,
    /// Vertices with zero or several active colors.
    pub one_hot_violations: Vec<usize>,
    /// Edges `(u, v, color)` whose endpoints share an active color.
    pub edge_violations: Vec<(usize, usize, usize)>,
}

impl ColoringReport {
    pub fn is_valid(&self) -> bool {
        self.one_hot_violations.is_empty() && self.edge_violations.is_empty()
    }
}

pub fn decode_coloring(
    graph: &WeightedGraph,
    colors: usize,
    state: &SpinState,
) -> Result<ColoringReport> {
    check_len("state length", graph.n_vertices() * colors, state.len())?;
    if state.domain() != SpinDomain::ZeroOne {
        return Err(invalid("state", "colorings are decoded from 0/1 spins"));
    }
    let active = |v: usize, k: usize| state.is_high(coloring_spin(colors, v, k));
    let mut report = ColoringReport {
        colors: Vec::with_capacity(graph.n_vertices()),
        one_hot_violations: Vec::new(),
        edge_violations: Vec::new(),
    };
    for v in 0..graph.n_vertices() {
        let on: Vec<usize> = (0..colors).filter(|&k| active(v, k)).collect();
        if on.len() == 1 {
            report.colors.push(Some(on[0]));
        } else {
            report.colors.push(None);
            report.one_hot_violations.push(v);
        }
    }
    for e in graph.edges() {
        for k in 0..colors {
            if active(e.u, k) && active(e.v, k) {
                report.edge_violations.push((e.u, e.v, k));
            }
        }
    }
    Ok(report)
}

/// One-hot spin state for a vertex coloring.
pub fn encode_coloring(colors: usize, assignment: &[usize]) -> Result<SpinState> {
    let mut s = SpinState::low(SpinDomain::ZeroOne, assignment.len() * colors);
    for (v, &k) in assignment.iter().enumerate() {
        if k >= colors {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: colors,
            });
        }
        s.set_high(coloring_spin(colors, v, k), true);
    }
    Ok(s)
}

/// Partition of spin indices into classes free of internal couplings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorClasses {
    classes: Vec<Vec<usize>>,
}

impl ColorClasses {
    /// Checks that `classes` partition `0..model.len()` with no coupled pair
    /// inside a class.
    pub fn new(classes: Vec<Vec<usize>>, model: &IsingModel) -> Result<Self> {
        let n = model.len();
        let mut class_of = vec![usize::MAX; n];
        for (c, members) in classes.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidPartition {
                    reason: alloc::format!("class {c} is empty"),
                });
            }
            for &i in members {
                if i >= n {
                    return Err(Error::InvalidPartition {
                        reason: alloc::format!("spin {i} out of range"),
                    });
                }
                if class_of[i] != usize::MAX {
                    return Err(Error::InvalidPartition {
                        reason: alloc::format!("spin {i} appears twice"),
                    });
                }
                class_of[i] = c;
            }
        }
        if let Some(i) = class_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::InvalidPartition {
                reason: alloc::format!("spin {i} is in no class"),
            });
        }
        for coupling in model.couplings() {
            if class_of[coupling.i] == class_of[coupling.j] {
                return Err(Error::InvalidPartition {
                    reason: alloc::format!(
                        "coupled spins {} and {} share class {}",
                        coupling.i,
                        coupling.j,
                        class_of[coupling.i]
                    ),
                });
            }
        }
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Number of spins covered.
    pub fn spins(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

/// Greedy first-fit coloring of the nonzero-coupling graph, in index order.
pub fn conflict_coloring(model: &IsingModel) -> ColorClasses {
    let n = model.len();
    let mut color = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut used = Vec::new();
    for i in 0..n {
        used.clear();
        used.resize(classes.len() + 1, false);
        for &(j, _) in model.neighbors(i) {
            if color[j] != usize::MAX {
                used[color[j]] = true;
            }
        }
        let c = used
            .iter()
            .position(|u| !u)
            .expect("one slot is always free");
        if c == classes.len() {
            classes.push(Vec::new());
        }
        classes[c].push(i);
        color[i] = c;
    }
    ColorClasses { classes }
}

/// Random connected graph with `edges` edges whose weights are drawn from `weights`.
///
/// A random spanning tree is laid first, then the remaining edges are drawn
/// uniformly from the absent pairs.
pub fn random_weighted_graph<R: Rng + ?Sized>(
    n_vertices: usize,
    edges: usize,
    weights: &[f64],
    rng: &mut R,
) -> Result<WeightedGraph> {
    let max_edges = n_vertices * n_vertices.saturating_sub(1) / 2;
    if n_vertices < 2 || edges + 1 < n_vertices || edges > max_edges {
        return Err(invalid(
            "edges",
            alloc::format!(
                "{edges} edges cannot form a connected simple graph on {n_vertices} vertices"
            ),
        ));
    }
    if weights.is_empty() {
        return Err(invalid("weights", "need at least one weight level"));
    }
    let mut order: Vec<usize> = (0..n_vertices).collect();
    order.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for k in 1..n_vertices {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        pairs.insert((parent.min(child), parent.max(child)));
    }
    let mut rest: Vec<(usize, usize)> = (0..n_vertices)
        .flat_map(|u| (u + 1..n_vertices).map(move |v| (u, v)))
        .filter(|p| !pairs.contains(p))
        .collect();
    rest.shuffle(rng);
    pairs.extend(rest.into_iter().take(edges - (n_vertices - 1)));
    let list = pairs
        .into_iter()
        .map(|(u, v)| Edge {
            u,
            v,
            weight: weights[rng.random_range(0..weights.len())],
        })
        .collect();
    WeightedGraph::new(n_vertices, list)
}

/// Random unit-weight graph with a planted proper `colors`-coloring.
///
/// Vertices get balanced random colors and `edges` edges are drawn among
/// differently colored pairs, so the graph is `colors`-colorable by construction.
pub fn random_colorable_graph<R: Rng + ?Sized>(
    n_vertices: usize,
    edges: usize,
    colors: usize,
    rng: &mut R,
) -> Result<WeightedGraph> {
    if colors < 2 {
        return Err(invalid("C", "need at least two colors"));
    }
    let mut planted: Vec<usize> = (0..n_vertices).map(|v| v % colors).collect();
    planted.shuffle(rng);
    let mut candidates: Vec<(usize, usize)> = (0..n_vertices)
        .flat_map(|u| (u + 1..n_vertices).map(move |v| (u, v)))
        .filter(|&(u, v)| planted[u] != planted[v])
        .collect();
    if edges > candidates.len() {
        return Err(invalid(
            "edges",
            alloc::format!(
                "at most {} edges respect the planted coloring",
                candidates.len()
            ),
        ));
    }
    candidates.shuffle(rng);
    candidates.truncate(edges);
    candidates.sort_unstable();
    WeightedGraph::unweighted(n_vertices, &candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_min(model: &IsingModel) -> (f64, Vec<u64>) {
        let n = model.len();
        let mut best = f64::INFINITY;
        let mut arg = Vec::new();
        for idx in 0..1u64 << n {
            let e = model
                .energy(&SpinState::from_index(model.domain(), n, idx))
                .unwrap();
            if e < best - 1e-9 {
                best = e;
                arg.clear();
            }
            if (e - best).abs() <= 1e-9 {
                arg.push(idx);
            }
        }
        (best, arg)
    }

    fn triangle() -> WeightedGraph {
        WeightedGraph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(WeightedGraph::new(0, vec![]).is_err());
        assert!(WeightedGraph::unweighted(2, &[(0, 0)]).is_err());
        assert!(WeightedGraph::unweighted(2, &[(0, 1), (1, 0)]).is_err());
        assert!(WeightedGraph::unweighted(2, &[(0, 2)]).is_err());
        let bad = Edge {
            u: 0,
            v: 1,
            weight: 0.0,
        };
        assert!(WeightedGraph::new(2, vec![bad]).is_err());
    }

    #[test]
    fn maxcut_single_edge() {
        let g = WeightedGraph::unweighted(2, &[(0, 1)]).unwrap();
        let m = map_maxcut(&g, 1.0).unwrap();
        assert_eq!(m.coupling(0, 1), -1.0);
        assert!(m.bias().iter().all(|&h| h == 0.0));
        let (_, ground) = brute_min(&m);
        assert_eq!(ground, vec![0b01, 0b10]);
        assert!(map_maxcut(&WeightedGraph::new(3, vec![]).unwrap(), 1.0).is_err());
        assert!(map_maxcut(&g, 0.0).is_err());
    }

    #[test]
    fn cut_energy_identity_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for trial in 0..20 {
            let n = 4 + trial % 9;
            let m_edges = rng.random_range(n - 1..=n * (n - 1) / 2);
            let g = random_weighted_graph(n, m_edges, &[1.0, 2.0, 3.0], &mut rng).unwrap();
            let scale = 0.5 + trial as f64 * 0.1;
            let model = map_maxcut(&g, scale).unwrap();
            for _ in 0..20 {
                let s = SpinState::random(SpinDomain::PlusMinusOne, n, &mut rng);
                // independent partition sum
                let direct: f64 = g
                    .edges()
                    .iter()
                    .filter(|e| s.get(e.u) != s.get(e.v))
                    .map(|e| e.weight)
                    .sum();
                let via_energy = (g.total_weight() - model.energy(&s).unwrap() / scale) / 2.0;
                assert!((direct - via_energy).abs() < 1e-9);
                assert!((decode_cut(&g, &s).unwrap().weight - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coloring_single_vertex_expansion() {
        let g = WeightedGraph::new(1, vec![]).unwrap();
        let m = map_coloring(&g, 2, 1.0).unwrap();
        let e = |bits: &[i8]| {
            m.energy(&SpinState::new(SpinDomain::ZeroOne, bits.to_vec()).unwrap())
                .unwrap()
        };
        assert_eq!(e(&[1, 0]), -1.0);
        assert_eq!(e(&[0, 1]), -1.0);
        assert_eq!(e(&[0, 0]), 0.0);
        assert_eq!(e(&[1, 1]), 0.0);
    }

    #[test]
    fn coloring_matches_penalty_minus_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_colorable_graph(4, 4, 3, &mut rng).unwrap();
        let a = 1.7;
        let m = map_coloring(&g, 3, a).unwrap();
        for idx in 0..1u64 << 12 {
            let s = SpinState::from_index(SpinDomain::ZeroOne, 12, idx);
            let x = |v: usize, k: usize| f64::from(s.get(coloring_spin(3, v, k)));
            let one_hot: f64 = (0..4)
                .map(|v| (1.0 - (0..3).map(|k| x(v, k)).sum::<f64>()).powi(2))
                .sum();
            let clash: f64 = g
                .edges()
                .iter()
                .map(|e| (0..3).map(|k| x(e.u, k) * x(e.v, k)).sum::<f64>())
                .sum();
            let penalty = a * one_hot + 2.0 * a * clash;
            assert!((m.energy(&s).unwrap() - (penalty - a * 4.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn coloring_row_sparsity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_colorable_graph(10, 17, 3, &mut rng).unwrap();
        let m = map_coloring(&g, 3, 1.0).unwrap();
        assert_eq!(m.len(), 30);
        let deg = g.degrees();
        for (v, &d) in deg.iter().enumerate() {
            for k in 0..3 {
                assert!(m.degree(coloring_spin(3, v, k)) <= 2 + d);
            }
        }
    }

    #[test]
    fn triangle_ground_states_are_the_six_colorings() {
        let m = map_coloring(&triangle(), 3, 1.0).unwrap();
        let (_, ground) = brute_min(&m);
        assert_eq!(ground.len(), 6);
        for idx in ground {
            let s = SpinState::from_index(SpinDomain::ZeroOne, 9, idx);
            assert!(decode_coloring(&triangle(), 3, &s).unwrap().is_valid());
        }
    }

    #[test]
    fn ground_states_are_proper_colorings_exhaustively() {
        // all graphs with n·C ≤ 16 drawn at random, C = 2..4
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &(n, colors) in &[(8usize, 2usize), (5, 3), (4, 4), (7, 2), (5, 3)] {
            for _ in 0..3 {
                let max = n * (n - 1) / 2;
                let edges = rng.random_range(0..=max.min(n + 2));
                let g = random_colorable_graph(n, edges.min(max), colors, &mut rng)
                    .or_else(|_| random_colorable_graph(n, 0, colors, &mut rng))
                    .unwrap();
                let m = map_coloring(&g, colors, 1.0).unwrap();
                let (best, ground) = brute_min(&m);
                assert!((best + n as f64).abs() < 1e-9);
                let proper = (0..1u64 << (n * colors))
                    .filter(|&idx| {
                        let s = SpinState::from_index(SpinDomain::ZeroOne, n * colors, idx);
                        decode_coloring(&g, colors, &s).unwrap().is_valid()
                    })
                    .collect::<Vec<_>>();
                assert_eq!(ground, proper);
            }
        }
    }

    #[test]
    fn lowering_maxcut_levels() {
        let g = WeightedGraph::new(
            3,
            vec![
                Edge {
                    u: 0,
                    v: 1,
                    weight: 1.0,
                },
                Edge {
                    u: 1,
                    v: 2,
                    weight: 2.0,
                },
                Edge {
                    u: 0,
                    v: 2,
                    weight: 3.0,
                },
            ],
        )
        .unwrap();
        let m = map_maxcut(&g, 1.0).unwrap();
        let l = to_crossbar(&m, &[33.0, 66.0, 99.0], 33.0, Quantization::Exact).unwrap();
        assert_eq!(l.bias_column, None);
        assert_eq!(l.columns(), 3);
        assert_eq!(l.conductance_targets.get(0, 1), 33.0);
        assert_eq!(l.conductance_targets.get(2, 1), 66.0);
        assert_eq!(l.conductance_targets.get(2, 0), 99.0);
        assert_eq!(l.conductance_targets.get(1, 1), 0.0);
        assert!(l.column_polarity.iter().all(|&p| p == Polarity::Negative));
    }

    #[test]
    fn lowering_coloring_levels() {
        let m = map_coloring(&triangle(), 3, 1.0).unwrap();
        let l = to_crossbar(&m, &[70.0, 140.0], 70.0, Quantization::Exact).unwrap();
        assert_eq!(l.bias_column, Some(9));
        assert_eq!(l.columns(), 10);
        for r in 0..9 {
            assert_eq!(l.conductance_targets.get(r, 9), 70.0);
            for c in 0..9 {
                let g = l.conductance_targets.get(r, c);
                assert!(g == 0.0 || g == 140.0);
            }
        }
        assert_eq!(l.column_polarity[9], Polarity::Positive);
        assert!(l.column_polarity[..9]
            .iter()
            .all(|&p| p == Polarity::Negative));
    }

    #[test]
    fn lowering_zero_model() {
        let m = IsingModel::zeros(SpinDomain::PlusMinusOne, 4).unwrap();
        let l = to_crossbar(&m, &[33.0], 33.0, Quantization::Exact).unwrap();
        assert_eq!(l.bias_column, None);
        assert!(l.conductance_targets.values().iter().all(|&g| g == 0.0));
        assert_eq!(l.zero_coupling_fraction(), 1.0);
    }

    #[test]
    fn lowering_rejects_mixed_sign_and_off_level() {
        let mixed = IsingModel::new(
            SpinDomain::PlusMinusOne,
            vec![0.0; 3],
            [(0, 1, 1.0), (1, 2, -1.0)],
        )
        .unwrap();
        assert_eq!(
            to_crossbar(&mixed, &[33.0], 33.0, Quantization::Exact),
            Err(Error::MixedSignColumn { column: 1 })
        );
        let mixed_bias =
            IsingModel::new(SpinDomain::ZeroOne, vec![1.0, -1.0], core::iter::empty()).unwrap();
        assert_eq!(
            to_crossbar(&mixed_bias, &[33.0], 33.0, Quantization::Exact),
            Err(Error::MixedSignColumn { column: 2 })
        );

        let off = IsingModel::new(SpinDomain::PlusMinusOne, vec![0.0; 2], [(0, 1, -1.2)]).unwrap();
        match to_crossbar(&off, &[33.0, 66.0], 33.0, Quantization::Exact) {
            Err(Error::Quantization { offenders }) => {
                assert_eq!(offenders, vec![(0, 1, -1.2), (1, 0, -1.2)]);
            }
            other => panic!("{other:?}"),
        }
        let snapped = to_crossbar(&off, &[33.0, 66.0], 33.0, Quantization::Nearest).unwrap();
        assert_eq!(snapped.conductance_targets.get(0, 1), 33.0);
    }

    #[test]
    fn sparsity_accounting_matches_direct_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_weighted_graph(24, 42, &[1.0, 2.0, 3.0], &mut rng).unwrap();
        let m = map_maxcut(&g, 1.0).unwrap();
        let l = to_crossbar(&m, &[33.0, 66.0, 99.0], 33.0, Quantization::Exact).unwrap();
        let direct = (0..24)
            .flat_map(|i| (0..24).map(move |j| (i, j)))
            .filter(|&(i, j)| m.coupling(i, j) == 0.0)
            .count() as f64
            / 576.0;
        assert_eq!(l.zero_coupling_fraction(), direct);
        assert_eq!(m.zero_coupling_fraction(), direct);
        assert!((direct - 0.854).abs() < 1e-3);
    }

    #[test]
    fn decode_cut_examples() {
        let g = WeightedGraph::new(
            2,
            vec![Edge {
                u: 0,
                v: 1,
                weight: 2.5,
            }],
        )
        .unwrap();
        let same = SpinState::new(SpinDomain::PlusMinusOne, vec![1, 1]).unwrap();
        assert_eq!(decode_cut(&g, &same).unwrap().weight, 0.0);
        let opposite = SpinState::new(SpinDomain::PlusMinusOne, vec![1, -1]).unwrap();
        let cut = decode_cut(&g, &opposite).unwrap();
        assert_eq!(cut.weight, 2.5);
        assert_eq!(cut.side, vec![true, false]);
    }

    #[test]
    fn decode_coloring_reports_violations() {
        let g = triangle();
        let good = encode_coloring(3, &[0, 1, 2]).unwrap();
        let r = decode_coloring(&g, 3, &good).unwrap();
        assert!(r.is_valid());
        assert_eq!(r.colors, vec![Some(0), Some(1), Some(2)]);

        let mut two = good.clone();
        two.set_high(coloring_spin(3, 1, 0), true);
        let r = decode_coloring(&g, 3, &two).unwrap();
        assert_eq!(r.one_hot_violations, vec![1]);
        assert_eq!(r.edge_violations, vec![(0, 1, 0)]);

        let clash = encode_coloring(3, &[0, 0, 2]).unwrap();
        let r = decode_coloring(&g, 3, &clash).unwrap();
        assert!(r.one_hot_violations.is_empty());
        assert_eq!(r.edge_violations, vec![(0, 1, 0)]);
        assert!(decode_coloring(&g, 2, &clash).is_err());
    }

    #[test]
    fn conflict_coloring_examples() {
        let free = IsingModel::zeros(SpinDomain::PlusMinusOne, 5).unwrap();
        assert_eq!(conflict_coloring(&free).classes(), &[vec![0, 1, 2, 3, 4]]);

        let path = IsingModel::new(
            SpinDomain::PlusMinusOne,
            vec![0.0; 6],
            (0..5).map(|i| (i, i + 1, 1.0)),
        )
        .unwrap();
        let classes = conflict_coloring(&path);
        assert_eq!(classes.classes(), &[vec![0, 2, 4], vec![1, 3, 5]]);
        assert!(ColorClasses::new(classes.classes().to_vec(), &path).is_ok());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_colorable_graph(10, 17, 3, &mut rng).unwrap();
        let m = map_coloring(&g, 3, 1.0).unwrap();
        let classes = conflict_coloring(&m);
        assert!(classes.len() <= m.max_degree() + 1);
        assert_eq!(classes.spins(), 30);
        assert!(ColorClasses::new(classes.classes().to_vec(), &m).is_ok());
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        let path = IsingModel::new(
            SpinDomain::PlusMinusOne,
            vec![0.0; 3],
            [(0, 1, 1.0), (1, 2, 1.0)],
        )
        .unwrap();
        assert!(ColorClasses::new(vec![vec![0, 1], vec![2]], &path).is_err());
        assert!(ColorClasses::new(vec![vec![0, 2]], &path).is_err());
        assert!(ColorClasses::new(vec![vec![0, 2], vec![1, 2]], &path).is_err());
        assert!(ColorClasses::new(vec![vec![0, 2], vec![1], vec![]], &path).is_err());
    }

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_weighted_graph(24, 42, &[1.0, 2.0, 3.0], &mut rng).unwrap();
        assert_eq!(g.edges().len(), 42);
        // connected: union-find over edges
        let mut parent: Vec<usize> = (0..24).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for e in g.edges() {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        assert!((0..24).all(|v| find(&mut parent, v) == root));
        assert!(random_weighted_graph(5, 3, &[1.0], &mut rng).is_err());
        assert!(random_colorable_graph(3, 3, 2, &mut rng).is_err());
    }
}
