//! Locally topologically persuasive (LTP) agents.
//!
//! `p` persuades a non-influential agent `q` when every path from every
//! influential agent with access to `q` passes through `p`. Hanging all
//! influential agents under one virtual root turns this into ordinary
//! dominance: a path from the root enters the network at exactly one
//! influential agent, so `p` persuades `q` iff `p` strictly dominates `q`.
//! LTP agents are then the children of the root whose dominator subtree holds
//! at least one non-influential agent, and `N_p` is that part of the subtree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::classify::{influencers_of, AgentClasses};
use crate::error::{Error, Result};
use crate::graph::Digraph;

/// Largest network [`persuades_oracle`] accepts.
pub const ORACLE_NODE_LIMIT: usize = 14;

/// The network plus a virtual root `r = n` with an edge to every influential
/// agent.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    n: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn root(&self) -> usize {
        self.n
    }

    /// Number of agents (the root excluded).
    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }
}

pub fn augment(g: &Digraph, classes: &AgentClasses) -> Result<FlowGraph> {
    let n = g.node_count();
    let influential = classes.influential();
    if influential.is_empty() {
        return Err(Error::NoInfluentialAgents);
    }
    let mut succ: Vec<Vec<usize>> = (0..n).map(|v| g.out_neighbors(v).to_vec()).collect();
    succ.push(influential.into_iter().collect());
    let mut pred = vec![Vec::new(); n + 1];
    for (u, outs) in succ.iter().enumerate() {
        for &v in outs {
            pred[v].push(u);
        }
    }
    Ok(FlowGraph { n, succ, pred })
}

/// Immediate dominators of a [`FlowGraph`], rooted at its virtual root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominatorTree {
    root: usize,
    idom: Vec<usize>,
}

impl DominatorTree {
    pub fn root(&self) -> usize {
        self.root
    }

    /// `None` for the root.
    pub fn idom(&self, v: usize) -> Option<usize> {
        (v != self.root).then(|| self.idom[v])
    }

    pub fn dominates(&self, a: usize, b: usize) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            if cur == self.root {
                return false;
            }
            cur = self.idom[cur];
        }
    }

    pub fn strictly_dominates(&self, a: usize, b: usize) -> bool {
        a != b && self.dominates(a, b)
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.idom.len()];
        for (v, &d) in self.idom.iter().enumerate() {
            if v != self.root {
                children[d].push(v);
            }
        }
        children
    }
}

/// Iterative dominator computation over reverse postorder
/// (Cooper, Harvey & Kennedy).
pub fn dominator_tree(f: &FlowGraph) -> Result<DominatorTree> {
    let size = f.n + 1;
    let root = f.root();

    // iterative DFS postorder
    let mut postorder = Vec::with_capacity(size);
    let mut visited = vec![false; size];
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if let Some(&w) = f.succ[v].get(*next) {
            *next += 1;
            if !visited[w] {
                visited[w] = true;
                stack.push((w, 0));
            }
        } else {
            postorder.push(v);
            stack.pop();
        }
    }
    if let Some(v) = visited.iter().position(|&seen| !seen) {
        return Err(Error::Unreachable(v));
    }

    let mut po_number = vec![0; size];
    for (i, &v) in postorder.iter().enumerate() {
        po_number[v] = i;
    }
    const UNDEF: usize = usize::MAX;
    let mut idom = vec![UNDEF; size];
    idom[root] = root;

    let intersect = |idom: &[usize], mut a: usize, mut b: usize| {
        while a != b {
            while po_number[a] < po_number[b] {
                a = idom[a];
            }
            while po_number[b] < po_number[a] {
                b = idom[b];
            }
        }
        a
    };

    let mut changed = true;
    while changed {
        changed = false;
        for &v in postorder.iter().rev() {
            if v == root {
                continue;
            }
            let mut new_idom = UNDEF;
            for &u in &f.pred[v] {
                if idom[u] == UNDEF {
                    continue;
                }
                new_idom = if new_idom == UNDEF { u } else { intersect(&idom, u, new_idom) };
            }
            if idom[v] != new_idom {
                idom[v] = new_idom;
                changed = true;
            }
        }
    }
    Ok(DominatorTree { root, idom })
}

/// LTP agents, their persuaded sets, and everything left over.
#[derive(Debug, Clone, PartialEq)]
pub struct PersuasionReport {
    tree: DominatorTree,
    ltp: BTreeMap<usize, Vec<usize>>,
    residual: Vec<usize>,
}

impl PersuasionReport {
    pub fn tree(&self) -> &DominatorTree {
        &self.tree
    }

    /// LTP agent -> `N_p`, both sorted.
    pub fn ltp(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.ltp
    }

    pub fn ltp_agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.ltp.keys().copied()
    }

    pub fn persuaded_by(&self, p: usize) -> Option<&[usize]> {
        self.ltp.get(&p).map(Vec::as_slice)
    }

    /// Agents that are neither LTP nor persuaded.
    pub fn residual(&self) -> &[usize] {
        &self.residual
    }

    /// Graphviz rendering of the dominator tree, one-based labels, `r` for
    /// the root; LTP agents are drawn as double circles.
    pub fn to_dot(&self) -> String {
        let root = self.tree.root();
        let label = |v: usize| if v == root { "r".to_string() } else { (v + 1).to_string() };
        let mut out = String::from("digraph dominators {\n");
        for p in self.ltp.keys() {
            let _ = writeln!(out, "  \"{}\" [shape=doublecircle];", label(*p));
        }
        for v in 0..root {
            if let Some(d) = self.tree.idom(v) {
                let _ = writeln!(out, "  \"{}\" -> \"{}\";", label(d), label(v));
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn ltp_report(f: &FlowGraph, classes: &AgentClasses) -> Result<PersuasionReport> {
    let tree = dominator_tree(f)?;
    let root = tree.root();
    let children = tree.children();

    let mut ltp = BTreeMap::new();
    let mut covered = vec![false; root];
    for &p in &children[root] {
        let mut persuaded = Vec::new();
        let mut stack = children[p].clone();
        while let Some(v) = stack.pop() {
            if !classes.is_influential(v) {
                persuaded.push(v);
            }
            stack.extend_from_slice(&children[v]);
        }
        if persuaded.is_empty() {
            continue;
        }
        persuaded.sort_unstable();
        covered[p] = true;
        for &q in &persuaded {
            covered[q] = true;
        }
        ltp.insert(p, persuaded);
    }
    let residual = (0..root).filter(|&v| !covered[v]).collect();
    Ok(PersuasionReport { tree, ltp, residual })
}

/// Classify, augment and report in one go.
pub fn analyze(g: &Digraph, classes: &AgentClasses) -> Result<PersuasionReport> {
    ltp_report(&augment(g, classes)?, classes)
}

/// Independent check of "`p` persuades `q`" straight from the definition,
/// without dominators.
///
/// Every path from `I_q` to `q` traverses `p` iff no influential agent other
/// than `p` reaches `q` once `p` is deleted; the search returns as soon as it
/// finds such an avoiding path.
pub fn persuades_oracle(g: &Digraph, classes: &AgentClasses, p: usize, q: usize) -> Result<bool> {
    let n = g.node_count();
    if n > ORACLE_NODE_LIMIT {
        return Err(Error::OracleSizeLimit { n, limit: ORACLE_NODE_LIMIT });
    }
    if p == q {
        return Err(Error::Precondition("p and q must differ".into()));
    }
    if classes.is_influential(q) {
        return Err(Error::Precondition(format!("agent {q} is influential")));
    }
    Ok(avoiding_path(g, &influencers_of(g, classes, q), p, q).is_none())
}

/// A path from some source other than `avoid` to `target` that never visits
/// `avoid`.
pub(crate) fn avoiding_path(
    g: &Digraph,
    sources: &BTreeSet<usize>,
    avoid: usize,
    target: usize,
) -> Option<Vec<usize>> {
    let n = g.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if s != avoid {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if u == target {
            let mut path = vec![u];
            let mut cur = u;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in g.out_neighbors(u) {
            if v != avoid && !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}
