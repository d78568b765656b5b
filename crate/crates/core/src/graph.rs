//! Weighted digraphs with a row-stochastic influence matrix, plus the
//! structural decompositions the analysis relies on: strongly connected
//! components, the condensation DAG, iSCC flags, periods and reachability.
//!
//! Edge convention: an edge `(i, j, w)` means agent `i` is an in-neighbour of
//! agent `j`, and it is stored as `W[j][i] = w`. Row `j` of `W` therefore
//! lists the weights agent `j` places on the opinions it listens to.

use std::collections::{BTreeSet, HashSet, VecDeque};

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};

/// Default tolerance on `|row sum - 1|`.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(from: usize, to: usize, weight: f64) -> Self {
        Self { from, to, weight }
    }
}

/// Immutable weighted digraph over agents `0..n`.
#[derive(Debug, Clone)]
pub struct Digraph {
    n: usize,
    edges: Vec<Edge>,
    weights: DMatrix<f64>,
    in_edges: Vec<Vec<(usize, f64)>>,
    out_nodes: Vec<Vec<usize>>,
}

impl Digraph {
    /// Assembles `W` from an edge list.
    ///
    /// Rejects duplicate edges, out-of-range endpoints, non-positive weights
    /// and nodes that touch no edge at all. Row-stochasticity is *not*
    /// enforced here; see [`Digraph::validate_row_stochastic`].
    pub fn build(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = HashSet::new();
        let mut weights = DMatrix::zeros(n, n);
        let mut in_edges = vec![Vec::new(); n];
        let mut out_nodes = vec![Vec::new(); n];
        let mut touched = vec![false; n];
        let mut list = Vec::new();
        for e in edges {
            if e.from >= n || e.to >= n {
                return Err(Error::NodeOutOfRange { from: e.from, to: e.to, n });
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidWeight { from: e.from, to: e.to, weight: e.weight });
            }
            if !seen.insert((e.from, e.to)) {
                return Err(Error::DuplicateEdge { from: e.from, to: e.to });
            }
            weights[(e.to, e.from)] = e.weight;
            in_edges[e.to].push((e.from, e.weight));
            out_nodes[e.from].push(e.to);
            touched[e.from] = true;
            touched[e.to] = true;
            list.push(e);
        }
        if let Some(i) = touched.iter().position(|t| !t) {
            return Err(Error::IsolatedNode(i));
        }
        for v in in_edges.iter_mut() {
            v.sort_by_key(|&(u, _)| u);
        }
        for v in out_nodes.iter_mut() {
            v.sort_unstable();
        }
        Ok(Self { n, edges: list, weights, in_edges, out_nodes })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The weighted adjacency matrix `W` (`W[j][i] > 0` iff edge `i -> j`).
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// In-neighbours of `v` with their weights, sorted by node.
    pub fn in_neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.in_edges[v]
    }

    /// Out-neighbours of `v`, sorted.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_nodes[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weights[(to, from)] > 0.0
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.has_edge(v, v)
    }

    /// Out-adjacency lists, one per node.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.out_nodes
    }

    /// Weighted in-degrees `d_in(i) = sum_j w_ij`.
    pub fn in_degrees(&self) -> Vec<f64> {
        self.in_edges.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect()
    }

    /// Laplacian `L = D - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.weights.clone();
        for (i, d) in self.in_degrees().into_iter().enumerate() {
            l[(i, i)] += d;
        }
        l
    }

    /// Rows whose sum deviates from 1 by more than `tol`.
    pub fn validate_row_stochastic(&self, tol: f64) -> RowStochasticReport {
        let deviations = self
            .in_degrees()
            .into_iter()
            .enumerate()
            .filter_map(|(row, sum)| {
                let deviation = (sum - 1.0).abs();
                (deviation > tol).then_some(RowDeviation { row, sum, deviation })
            })
            .collect();
        RowStochasticReport { tol, deviations }
    }

    /// Like [`validate_row_stochastic`](Self::validate_row_stochastic) with
    /// the default tolerance, but as a hard check.
    pub fn require_row_stochastic(&self) -> Result<()> {
        match self.validate_row_stochastic(ROW_SUM_TOL).deviations.first() {
            None => Ok(()),
            Some(d) => Err(Error::NotRowStochastic { row: d.row, sum: d.sum }),
        }
    }

    pub fn scc_decompose(&self) -> SccDecomposition {
        SccDecomposition::new(&self.out_nodes)
    }

    /// Whether the given strongly connected component is aperiodic.
    ///
    /// Errors if the component is a single node without a self-loop.
    pub fn is_aperiodic(&self, scc: &SccDecomposition, component: usize) -> Result<bool> {
        let members = &scc.components()[component];
        match period(&self.out_nodes, members) {
            Some(p) => Ok(p == 1),
            None => Err(Error::UndefinedPeriod(component)),
        }
    }

    /// Forward-reachable closure of `sources`, sources included.
    pub fn reachable_from(&self, sources: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mask = reach_mask(self.n, sources.iter().copied(), |v| self.out_nodes[v].iter().copied());
        mask_to_set(&mask)
    }

    /// Nodes that can reach `target` (including `target`).
    pub fn reaching(&self, target: usize) -> Vec<bool> {
        reach_mask(self.n, [target], |v| self.in_edges[v].iter().map(|&(u, _)| u))
    }

    pub fn is_weakly_connected(&self) -> bool {
        let mask = reach_mask(self.n, [0], |v| {
            self.out_nodes[v]
                .iter()
                .copied()
                .chain(self.in_edges[v].iter().map(|&(u, _)| u))
        });
        mask.into_iter().all(|b| b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowDeviation {
    pub row: usize,
    pub sum: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticReport {
    pub tol: f64,
    pub deviations: Vec<RowDeviation>,
}

impl RowStochasticReport {
    pub fn is_valid(&self) -> bool {
        self.deviations.is_empty()
    }
}

/// Strongly connected components of a digraph.
///
/// Components are numbered by their smallest member; members are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
    condensation: Vec<(usize, usize)>,
    independent: Vec<bool>,
}

impl SccDecomposition {
    /// Decomposes the graph given by out-adjacency lists.
    pub fn new(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut components = strongly_connected_components(adjacency);
        for c in components.iter_mut() {
            c.sort_unstable();
        }
        components.sort_unstable_by_key(|c| c[0]);

        let mut component_of = vec![0; n];
        for (id, c) in components.iter().enumerate() {
            for &v in c {
                component_of[v] = id;
            }
        }
        let mut cond = BTreeSet::new();
        for (u, outs) in adjacency.iter().enumerate() {
            for &v in outs {
                let (cu, cv) = (component_of[u], component_of[v]);
                if cu != cv {
                    cond.insert((cu, cv));
                }
            }
        }
        let mut independent = vec![true; components.len()];
        for &(_, cv) in &cond {
            independent[cv] = false;
        }
        Self { component_of, components, condensation: cond.into_iter().collect(), independent }
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Edges of the condensation DAG, sorted.
    pub fn condensation_edges(&self) -> &[(usize, usize)] {
        &self.condensation
    }

    /// True iff every member's in-neighbours lie inside the component.
    pub fn is_independent(&self, component: usize) -> bool {
        self.independent[component]
    }

    pub fn independent_components(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&c| self.independent[c])
    }
}

/// Tarjan SCC over out-adjacency lists.
pub fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(adjacency.len(), 0);
    for _ in adjacency {
        g.add_node(());
    }
    for (u, outs) in adjacency.iter().enumerate() {
        for &v in outs {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(v), ());
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| c.into_iter().map(|ix| ix.index()).collect())
        .collect()
}

/// Period of a strongly connected node set: the gcd of its cycle lengths.
///
/// Uses BFS levels from one member; the gcd of `level(u) + 1 - level(v)` over
/// the edges `u -> v` inside the set equals the gcd of all cycle lengths.
/// Returns `None` when the set contains no cycle (one node, no self-loop).
pub fn period(adjacency: &[Vec<usize>], members: &[usize]) -> Option<usize> {
    let inside: HashSet<usize> = members.iter().copied().collect();
    let start = *members.first()?;
    let mut level = vec![usize::MAX; adjacency.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if inside.contains(&v) && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for &u in members {
        for &v in &adjacency[u] {
            if inside.contains(&v) {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    (g > 0).then_some(g)
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn reach_mask<I, F>(n: usize, sources: impl IntoIterator<Item = usize>, next: F) -> Vec<bool>
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> I,
{
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    for s in sources {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for v in next(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

pub(crate) fn mask_to_set(mask: &[bool]) -> BTreeSet<usize> {
    mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn single_self_loop() {
        let g = Digraph::build(1, [Edge::new(0, 0, 1.0)]).unwrap();
        assert_eq!(g.weights()[(0, 0)], 1.0);
        assert!(g.validate_row_stochastic(ROW_SUM_TOL).is_valid());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Digraph::build(2, [Edge::new(0, 1, 0.5), Edge::new(0, 1, 0.5)]).unwrap_err(),
            Error::DuplicateEdge { from: 0, to: 1 }
        );
        assert!(matches!(
            Digraph::build(2, [Edge::new(0, 2, 1.0)]),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            Digraph::build(2, [Edge::new(0, 1, 0.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            Digraph::build(2, [Edge::new(0, 1, -1.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert_eq!(
            Digraph::build(3, [Edge::new(0, 1, 1.0), Edge::new(1, 0, 1.0)]).unwrap_err(),
            Error::IsolatedNode(2)
        );
        assert_eq!(Digraph::build(0, []).unwrap_err(), Error::EmptyGraph);
    }

    #[test]
    fn fixture_a_row_sums() {
        let g = fixtures::fixture_a().0;
        // hand summation: node 3 hears 2 and 6 at 0.5 each, every other node
        // has exactly one in-edge of weight 1.
        for (j, &(ref ins, total)) in [
            (vec![5], 1.0),
            (vec![1], 1.0),
            (vec![1, 5], 1.0),
            (vec![2], 1.0),
            (vec![3], 1.0),
            (vec![4], 1.0),
        ]
        .iter()
        .enumerate()
        {
            let got: Vec<usize> = g.in_neighbors(j).iter().map(|&(u, _)| u).collect();
            assert_eq!(&got, ins);
            assert_eq!(g.in_neighbors(j).iter().map(|&(_, w)| w).sum::<f64>(), total);
        }
        assert!(g.validate_row_stochastic(ROW_SUM_TOL).is_valid());
    }

    #[test]
    fn row_deviation_and_tolerance() {
        let g = Digraph::build(1, [Edge::new(0, 0, 0.9)]).unwrap();
        let report = g.validate_row_stochastic(ROW_SUM_TOL);
        assert_eq!(report.deviations.len(), 1);
        assert_eq!(report.deviations[0].row, 0);
        assert!((report.deviations[0].deviation - 0.1).abs() < 1e-12);
        assert!(g.validate_row_stochastic(0.2).is_valid());
        assert!(g.require_row_stochastic().is_err());
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = fixtures::fixture_a().0;
        let l = g.laplacian();
        for i in 0..6 {
            assert!(l.row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn two_cycle_is_one_iscc() {
        let g = Digraph::build(2, [Edge::new(0, 1, 1.0), Edge::new(1, 0, 1.0)]).unwrap();
        let scc = g.scc_decompose();
        assert_eq!(scc.components(), &[vec![0, 1]]);
        assert!(scc.is_independent(0));
    }

    #[test]
    fn fixture_sccs() {
        let (a, _) = fixtures::fixture_a();
        let scc = a.scc_decompose();
        // 3 -> 4 -> 5 -> 6 -> 3 is a cycle.
        assert_eq!(scc.components(), &[vec![0], vec![1], vec![2, 3, 4, 5]]);
        let isccs: Vec<_> = scc.independent_components().collect();
        assert_eq!(isccs, vec![1]);

        let (b, _) = fixtures::fixture_b();
        let scc = b.scc_decompose();
        assert_eq!(scc.components(), &[vec![0, 1], vec![2], vec![3], vec![4]]);
        let isccs: Vec<_> = scc.independent_components().collect();
        assert_eq!(isccs, vec![0]);
    }

    #[test]
    fn aperiodicity() {
        let g = Digraph::build(1, [Edge::new(0, 0, 1.0)]).unwrap();
        assert!(g.is_aperiodic(&g.scc_decompose(), 0).unwrap());

        let g = Digraph::build(2, [Edge::new(0, 1, 1.0), Edge::new(1, 0, 1.0)]).unwrap();
        assert!(!g.is_aperiodic(&g.scc_decompose(), 0).unwrap());

        let g = Digraph::build(
            2,
            [Edge::new(0, 0, 0.5), Edge::new(0, 1, 1.0), Edge::new(1, 0, 0.5)],
        )
        .unwrap();
        assert!(g.is_aperiodic(&g.scc_decompose(), 0).unwrap());

        // node 0 sits alone in its own SCC without a self-loop
        let g = Digraph::build(2, [Edge::new(0, 1, 1.0), Edge::new(1, 1, 1.0)]).unwrap();
        let scc = g.scc_decompose();
        assert_eq!(g.is_aperiodic(&scc, scc.component_of(0)), Err(Error::UndefinedPeriod(0)));
    }

    #[test]
    fn reachability() {
        let (g, _) = fixtures::fixture_a();
        assert_eq!(g.reachable_from(&set(&[1])), set(&[0, 1, 2, 3, 4, 5]));
        assert_eq!(g.reachable_from(&set(&[])), set(&[]));
        assert_eq!(g.reachable_from(&set(&[4])), set(&[0, 2, 3, 4, 5]));
    }

    #[test]
    fn weak_connectivity() {
        let (g, _) = fixtures::fixture_a();
        assert!(g.is_weakly_connected());
        let g = Digraph::build(2, [Edge::new(0, 0, 1.0), Edge::new(1, 1, 1.0)]).unwrap();
        assert!(!g.is_weakly_connected());
    }
}
