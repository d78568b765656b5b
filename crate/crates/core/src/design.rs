//! Synthesis of networks whose LTP structure realizes a prescribed opinion
//! clustering.
//!
//! Every block either has a designated agent, which becomes the LTP agent
//! persuading the rest of its block, or is an oblivious iSCC block. Blocks are
//! wired internally so the designated agent reaches every member and no
//! member hears from outside, and externally by a random DAG whose edges all
//! land on designated agents.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use petgraph::unionfind::UnionFind;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::AgentProfile;
use crate::clusters::{predicted_clusters, ClusterSet, Provenance};
use crate::error::{Error, Result};
use crate::graph::{Digraph, Edge};
use crate::random::{random_opinions, trial_rng};

pub const DEFAULT_DENSITY: f64 = 0.3;
/// Stubbornness given to stubborn agents of a synthesized network.
pub const DESIGN_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    blocks: Vec<Vec<usize>>,
    ltp: Vec<Option<usize>>,
    stubborn: BTreeSet<usize>,
    edges: Vec<(usize, usize)>,
    seed: u64,
    density: f64,
    n: usize,
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::InfeasibleDesign(msg.into())
}

impl DesignSpec {
    /// `ltp[b]` is the designated agent of `blocks[b]`, or `None` for an
    /// oblivious iSCC block. `edges` are inter-agent edges the design must
    /// contain.
    pub fn new(
        blocks: Vec<Vec<usize>>,
        ltp: Vec<Option<usize>>,
        stubborn: Vec<usize>,
        edges: Vec<(usize, usize)>,
        seed: u64,
        density: f64,
    ) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        if n == 0 {
            return Err(infeasible("no agents"));
        }
        ClusterSet::new(n, blocks.clone(), Provenance::Predicted)
            .map_err(|_| infeasible(format!("blocks do not partition agents 0..{n}")))?;
        if ltp.len() != blocks.len() {
            return Err(infeasible(format!("{} blocks but {} ltp entries", blocks.len(), ltp.len())));
        }
        for (b, d) in blocks.iter().zip(&ltp) {
            if let Some(d) = d {
                if !b.contains(d) {
                    return Err(infeasible(format!("designated agent {d} is not in its block")));
                }
            }
        }
        let designated: BTreeSet<usize> = ltp.iter().flatten().copied().collect();
        let stubborn: BTreeSet<usize> = stubborn.into_iter().collect();
        if let Some(s) = stubborn.iter().find(|s| !designated.contains(s)) {
            return Err(infeasible(format!("stubborn agent {s} is not a designated agent")));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(infeasible(format!("density {density} is outside [0, 1]")));
        }
        let spec = Self { blocks, ltp, stubborn, edges: Vec::new(), seed, density, n };
        let mut seen = BTreeSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(infeasible(format!("edge ({u}, {v}) leaves the agent range")));
            }
            if !seen.insert((u, v)) {
                return Err(infeasible(format!("edge ({u}, {v}) is listed twice")));
            }
            let (bu, bv) = (spec.block_index(u), spec.block_index(v));
            if bu != bv {
                match spec.ltp[bv] {
                    None => return Err(infeasible(format!("edge ({u}, {v}) enters an iSCC block"))),
                    Some(d) if d != v => {
                        return Err(infeasible(format!(
                            "edge ({u}, {v}) enters non-designated agent {v} from outside its block"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { edges, ..spec })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn ltp(&self) -> &[Option<usize>] {
        &self.ltp
    }

    pub fn stubborn(&self) -> &BTreeSet<usize> {
        &self.stubborn
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    fn block_index(&self, v: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&v)).expect("agent in a block")
    }

    /// `beta = DESIGN_BETA` on stubborn agents and seeded opinions in
    /// `[0, 10]`.
    pub fn profile(&self) -> AgentProfile {
        let beta = (0..self.n).map(|i| if self.stubborn.contains(&i) { DESIGN_BETA } else { 0.0 }).collect();
        let x0 = random_opinions(self.n, &mut trial_rng(self.seed, 1));
        AgentProfile::new(beta, x0).expect("valid design profile")
    }

    pub fn partition(&self) -> ClusterSet {
        ClusterSet::new(self.n, self.blocks.clone(), Provenance::Predicted).expect("validated partition")
    }
}

struct Builder {
    edges: BTreeSet<(usize, usize)>,
}

impl Builder {
    fn add(&mut self, u: usize, v: usize) -> bool {
        self.edges.insert((u, v))
    }

    fn has_in_edge(&self, v: usize) -> bool {
        self.edges.iter().any(|&(_, t)| t == v)
    }
}

/// Block order: iSCC blocks, then stubborn-led blocks, then the rest,
/// constrained by prescribed cross-block edges.
fn block_order(spec: &DesignSpec) -> Result<Vec<usize>> {
    let k = spec.blocks.len();
    let rank = |b: usize| match spec.ltp[b] {
        None => 0,
        Some(d) if spec.stubborn.contains(&d) => 1,
        Some(_) => 2,
    };
    let mut succ = vec![BTreeSet::new(); k];
    let mut indeg = vec![0usize; k];
    for &(u, v) in &spec.edges {
        let (bu, bv) = (spec.block_index(u), spec.block_index(v));
        if bu != bv && succ[bu].insert(bv) {
            indeg[bv] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..k).filter(|&b| indeg[b] == 0).map(|b| Reverse((rank(b), b))).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse((_, b))) = heap.pop() {
        order.push(b);
        for &c in &succ[b] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                heap.push(Reverse((rank(c), c)));
            }
        }
    }
    if order.len() < k {
        return Err(infeasible("prescribed edges form a cycle between blocks"));
    }
    Ok(order)
}

/// Builds a weakly connected, row-stochastic network realizing `spec`.
pub fn synthesize(spec: &DesignSpec) -> Result<Digraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let order = block_order(spec)?;
    let mut b = Builder { edges: spec.edges.iter().copied().collect() };

    // Intra-block wiring.
    for (bi, block) in spec.blocks.iter().enumerate() {
        match spec.ltp[bi] {
            None => {
                let mut cycle = block.clone();
                cycle.shuffle(&mut rng);
                for w in 0..cycle.len() {
                    if cycle.len() > 1 {
                        b.add(cycle[w], cycle[(w + 1) % cycle.len()]);
                    }
                }
                let anchor = *cycle.choose(&mut rng).expect("non-empty block");
                b.add(anchor, anchor);
            }
            Some(d) => {
                let mut rest: Vec<usize> = block.iter().copied().filter(|&v| v != d).collect();
                rest.shuffle(&mut rng);
                let mut attached = vec![d];
                for &v in &rest {
                    let parent = *attached.choose(&mut rng).expect("root attached");
                    b.add(parent, v);
                    attached.push(v);
                }
            }
        }
        for &u in block {
            for &v in block {
                if u != v && rng.random_bool(spec.density) {
                    b.add(u, v);
                }
            }
        }
    }

    // Inter-block DAG. An origin is an influential-rooted entry point: each
    // member of an iSCC block, or a whole led block through its leader.
    let mut picked = vec![false; spec.blocks.len()];
    let origin_of = |v: usize| -> usize {
        let bv = spec.block_index(v);
        spec.ltp[bv].unwrap_or(v)
    };
    for &(u, v) in &spec.edges {
        let bu = spec.block_index(u);
        if bu != spec.block_index(v) {
            picked[bu] = true;
        }
    }
    for (pos, &bi) in order.iter().enumerate() {
        let Some(d) = spec.ltp[bi] else { continue };
        let earlier = &order[..pos];
        let mut candidates: Vec<usize> = earlier
            .iter()
            .flat_map(|&c| match spec.ltp[c] {
                None => spec.blocks[c].clone(),
                Some(l) => vec![l],
            })
            .collect();
        let have: BTreeSet<usize> = spec
            .edges
            .iter()
            .filter(|&&(u, v)| v == d && spec.block_index(u) != bi)
            .map(|&(u, _)| origin_of(u))
            .collect();
        candidates.retain(|o| !have.contains(o));
        let need = if spec.stubborn.contains(&d) {
            usize::from(have.is_empty() && !candidates.is_empty())
        } else {
            let lo = 2usize.saturating_sub(have.len());
            if candidates.len() < lo {
                return Err(infeasible(format!(
                    "designated agent {d} is not stubborn and cannot be reached from two independent influential sources"
                )));
            }
            if lo == 0 {
                0
            } else {
                rng.random_range(lo..=candidates.len().min(lo + 1))
            }
        };
        candidates.shuffle(&mut rng);
        for &o in candidates.iter().take(need) {
            let ob = spec.block_index(o);
            let from = match spec.ltp[ob] {
                None => o,
                Some(_) => *spec.blocks[ob].choose(&mut rng).expect("non-empty block"),
            };
            b.add(from, d);
            picked[ob] = true;
        }
    }

    // iSCC blocks nobody listens to still feed a later led block.
    for (pos, &bi) in order.iter().enumerate() {
        if spec.ltp[bi].is_some() || picked[bi] {
            continue;
        }
        let later: Vec<usize> = order[pos + 1..].iter().filter_map(|&c| spec.ltp[c]).collect();
        if let Some(&d) = later.choose(&mut rng) {
            let from = *spec.blocks[bi].choose(&mut rng).expect("non-empty block");
            b.add(from, d);
        }
    }

    // Join weak components through edges out of the first block.
    let mut uf = UnionFind::<usize>::new(spec.blocks.len());
    for &(u, v) in &b.edges {
        uf.union(spec.block_index(u), spec.block_index(v));
    }
    let first = order[0];
    for &bi in &order[1..] {
        if uf.equiv(first, bi) {
            continue;
        }
        let Some(d) = spec.ltp[bi] else { continue };
        let from = *spec.blocks[first].choose(&mut rng).expect("non-empty block");
        b.add(from, d);
        uf.union(first, bi);
    }
    if let Some(bi) = (0..spec.blocks.len()).find(|&bi| !uf.equiv(first, bi)) {
        return Err(infeasible(format!("block {bi} cannot be connected without entering an iSCC block")));
    }

    // Leaders nobody feeds keep their own opinion in view.
    for &d in spec.ltp.iter().flatten() {
        if !b.has_in_edge(d) {
            b.add(d, d);
        }
    }

    let mut in_deg = vec![0usize; spec.n];
    for &(_, v) in &b.edges {
        in_deg[v] += 1;
    }
    let edges = b.edges.iter().map(|&(u, v)| Edge::new(u, v, 1.0 / in_deg[v] as f64));
    Digraph::build(spec.n, edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignVerdict {
    pub predicted: ClusterSet,
    /// First mismatch between the predicted clusters and the spec.
    pub discrepancy: Option<String>,
}

impl DesignVerdict {
    pub fn is_valid(&self) -> bool {
        self.discrepancy.is_none()
    }
}

/// Recomputes the predicted clusters of `g` under the spec's stubborn set and
/// compares them with the spec's partition.
pub fn validate_design(g: &Digraph, spec: &DesignSpec) -> Result<DesignVerdict> {
    if g.node_count() != spec.n {
        return Err(Error::Dimension(format!("graph has {} agents, spec has {}", g.node_count(), spec.n)));
    }
    let predicted = predicted_clusters(g, &spec.profile())?;
    let wanted = spec.partition();
    let discrepancy = wanted
        .blocks()
        .iter()
        .find_map(|b| {
            let got = &predicted.blocks()[predicted.block_of(b[0])];
            (got != b).then(|| format!("block {b:?} is predicted as {got:?}"))
        });
    Ok(DesignVerdict { predicted, discrepancy })
}
