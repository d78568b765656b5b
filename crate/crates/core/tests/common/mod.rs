//! Random instance generators and brute-force oracles shared by the
//! integration suites. Nothing here calls into the library's algorithms
//! except to build inputs.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fjcluster::graph::Edge;
use fjcluster::{AgentProfile, Digraph};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- generators

/// Random weakly connected edge set: a randomly oriented spanning tree plus
/// every other ordered pair with probability `density`.
pub fn random_topology<R: Rng>(rng: &mut R, n: usize, density: f64, self_loops: f64) -> BTreeSet<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for k in 1..n {
        let u = order[k];
        let v = order[rng.random_range(0..k)];
        if rng.random_bool(0.5) {
            edges.insert((u, v));
        } else {
            edges.insert((v, u));
        }
    }
    for u in 0..n {
        for v in 0..n {
            let p = if u == v { self_loops } else { density };
            if rng.random_bool(p) {
                edges.insert((u, v));
            }
        }
    }
    edges
}

/// Gives every node at least one in-edge (a self-loop if it has none) and
/// draws row-normalized weights from `(0, 1]`.
pub fn weigh<R: Rng>(rng: &mut R, n: usize, mut edges: BTreeSet<(usize, usize)>) -> Digraph {
    for v in 0..n {
        if !edges.iter().any(|&(_, t)| t == v) {
            edges.insert((v, v));
        }
    }
    let mut incoming = vec![Vec::new(); n];
    for &(u, v) in &edges {
        incoming[v].push((u, 1.0 - rng.random::<f64>()));
    }
    let list = incoming.iter().enumerate().flat_map(|(v, ins)| {
        let total: f64 = ins.iter().map(|&(_, w)| w).sum();
        ins.iter().map(move |&(u, w)| Edge::new(u, v, w / total))
    });
    Digraph::build(n, list.collect::<Vec<_>>()).expect("generated graph is valid")
}

pub fn random_profile<R: Rng>(rng: &mut R, n: usize, stubborn: &BTreeSet<usize>) -> AgentProfile {
    let beta = (0..n)
        .map(|i| match (stubborn.contains(&i), rng.random_bool(0.1)) {
            (false, _) => 0.0,
            (true, true) => 1.0,
            (true, false) => rng.random_range(0.01..1.0),
        })
        .collect();
    let x0 = (0..n).map(|_| rng.random_range(0.0..=10.0)).collect();
    AgentProfile::new(beta, x0).unwrap()
}

/// Source components of the condensation, found by brute force.
pub fn source_components(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let c = closure(g);
    let mut done = vec![false; n];
    let mut out = Vec::new();
    for v in 0..n {
        if done[v] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&u| u == v || (c[u][v] && c[v][u])).collect();
        for &u in &comp {
            done[u] = true;
        }
        let entered = g.edges().iter().any(|e| !comp.contains(&e.from) && comp.contains(&e.to));
        if !entered {
            out.push(comp);
        }
    }
    out
}

/// A network without oblivious agents: a random weakly connected topology
/// with a stubborn agent in every source component, plus random extras.
pub fn no_oblivious_instance<R: Rng>(rng: &mut R, max_n: usize) -> (Digraph, AgentProfile) {
    let n = rng.random_range(2..=max_n);
    let density = rng.random_range(0.02..0.25);
    let topo = random_topology(rng, n, density, 0.05);
    let g = weigh(rng, n, topo);
    let mut stubborn: BTreeSet<usize> = source_components(&g)
        .iter()
        .map(|c| *c.choose(rng).unwrap())
        .collect();
    for v in 0..n {
        if rng.random_bool(0.15) {
            stubborn.insert(v);
        }
    }
    let p = random_profile(rng, n, &stubborn);
    (g, p)
}

/// Shape of a generated network with oblivious agents.
#[derive(Debug, Clone)]
pub struct ObliviousInstance {
    pub graph: Digraph,
    pub profile: AgentProfile,
    /// The planted all-oblivious iSCCs.
    pub cores: Vec<Vec<usize>>,
    pub periodic: bool,
}

/// Networks whose sources are planted oblivious cores. Cores are cycles made
/// aperiodic by a self-loop, or pure cycles when `periodic`. Remaining agents
/// listen to earlier agents; a few of them may be stubborn.
pub fn oblivious_instance<R: Rng>(rng: &mut R, max_rest: usize, periodic: bool, degroot: bool) -> ObliviousInstance {
    let n_cores = rng.random_range(1..=3);
    let mut cores = Vec::new();
    let mut edges = BTreeSet::new();
    let mut next = 0;
    for c in 0..n_cores {
        let lo = if periodic && c == 0 { 2 } else { 1 };
        let size = rng.random_range(lo..=4);
        let members: Vec<usize> = (next..next + size).collect();
        next += size;
        if size > 1 {
            for k in 0..size {
                edges.insert((members[k], members[(k + 1) % size]));
            }
        }
        let make_periodic = periodic && c == 0;
        if !make_periodic {
            let m = *members.choose(rng).unwrap();
            edges.insert((m, m));
            for &u in &members {
                for &v in &members {
                    if u != v && rng.random_bool(0.2) {
                        edges.insert((u, v));
                    }
                }
            }
        }
        cores.push(members);
    }
    let core_end = next;
    let rest = rng.random_range(1..=max_rest);
    let n = core_end + rest;
    for v in core_end..n {
        if v == core_end {
            for c in &cores {
                edges.insert((*c.choose(rng).unwrap(), v));
            }
        }
        let k = rng.random_range(1..=3);
        for _ in 0..k {
            let u = rng.random_range(0..v);
            edges.insert((u, v));
        }
    }
    for _ in 0..rest / 3 {
        let u = rng.random_range(core_end..n);
        let v = rng.random_range(core_end..n);
        edges.insert((u, v));
    }
    let g = weigh(rng, n, edges);
    let stubborn: BTreeSet<usize> =
        if degroot { BTreeSet::new() } else { (core_end..n).filter(|_| rng.random_bool(0.2)).collect() };
    let profile = random_profile(rng, n, &stubborn);
    ObliviousInstance { graph: g, profile, cores, periodic }
}

// ------------------------------------------------------------------- oracles

/// Reflexive-transitive closure by Floyd-Warshall: `c[u][v]` iff a walk of
/// length >= 0 leads from `u` to `v`.
pub fn closure(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut c = vec![vec![false; n]; n];
    for (v, row) in c.iter_mut().enumerate() {
        row[v] = true;
    }
    for e in g.edges() {
        c[e.from][e.to] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if c[i][k] {
                for j in 0..n {
                    if c[k][j] {
                        c[i][j] = true;
                    }
                }
            }
        }
    }
    c
}

/// Closure of the graph with node `removed` deleted.
pub fn closure_without(g: &Digraph, removed: usize) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut c = vec![vec![false; n]; n];
    for (v, row) in c.iter_mut().enumerate() {
        if v != removed {
            row[v] = true;
        }
    }
    for e in g.edges() {
        if e.from != removed && e.to != removed {
            c[e.from][e.to] = true;
        }
    }
    for k in (0..n).filter(|&k| k != removed) {
        for i in 0..n {
            if c[i][k] {
                for j in 0..n {
                    if c[k][j] {
                        c[i][j] = true;
                    }
                }
            }
        }
    }
    c
}

/// Influential agents straight from the definitions.
pub fn influential_oracle(g: &Digraph, p: &AgentProfile) -> BTreeSet<usize> {
    let c = closure(g);
    let stubborn: Vec<usize> = p.stubborn();
    let oblivious = |v: usize| !stubborn.iter().any(|&s| c[s][v]);
    let mut out: BTreeSet<usize> = stubborn.iter().copied().collect();
    for comp in source_components(g) {
        if comp.iter().all(|&v| oblivious(v)) {
            out.extend(comp);
        }
    }
    out
}

/// "Every path from `I_q` to `q` passes through `p`", by reachability in
/// `G - p`.
pub fn persuades_by_closure(g: &Digraph, influential: &BTreeSet<usize>, p: usize, q: usize) -> bool {
    let c = closure(g);
    let iq: Vec<usize> = influential.iter().copied().filter(|&i| c[i][q]).collect();
    let cut = closure_without(g, p);
    !iq.iter().any(|&i| i != p && cut[i][q])
}

/// Same predicate by exhaustive enumeration of simple paths ending at `q`.
pub fn persuades_by_paths(g: &Digraph, influential: &BTreeSet<usize>, p: usize, q: usize) -> bool {
    fn dfs(g: &Digraph, u: usize, q: usize, p: usize, on: &mut Vec<bool>) -> bool {
        // true if some simple path u -> q avoids p
        if u == p {
            return false;
        }
        if u == q {
            return true;
        }
        on[u] = true;
        let found = g.out_neighbors(u).iter().any(|&v| !on[v] && dfs(g, v, q, p, on));
        on[u] = false;
        found
    }
    let mut on = vec![false; g.node_count()];
    !influential.iter().any(|&i| dfs(g, i, q, p, &mut on))
}

/// Lengths of all simple cycles through members of `comp`, by DFS from each
/// start node restricted to larger-indexed nodes.
pub fn simple_cycle_lengths(g: &Digraph, comp: &[usize]) -> BTreeSet<usize> {
    fn walk(g: &Digraph, start: usize, u: usize, depth: usize, inside: &[bool], on: &mut Vec<bool>, out: &mut BTreeSet<usize>) {
        for &v in g.out_neighbors(u) {
            if !inside[v] || v < start {
                continue;
            }
            if v == start {
                out.insert(depth + 1);
            } else if !on[v] {
                on[v] = true;
                walk(g, start, v, depth + 1, inside, on, out);
                on[v] = false;
            }
        }
    }
    let n = g.node_count();
    let mut inside = vec![false; n];
    for &v in comp {
        inside[v] = true;
    }
    let mut out = BTreeSet::new();
    for &s in comp {
        let mut on = vec![false; n];
        on[s] = true;
        walk(g, s, s, 0, &inside, &mut on, &mut out);
    }
    out
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

// ------------------------------------------------------------ dense algebra

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(m: &fjcluster::linalg::DenseMatrix) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for t in 0..k {
            let x = a[i][t];
            if x != 0.0 {
                for j in 0..m {
                    c[i][j] += x * b[t][j];
                }
            }
        }
    }
    c
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b).flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a.iter().enumerate().map(|(i, r)| {
        let mut row = r.clone();
        row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
        row
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular matrix in oracle");
        for x in m[col].iter_mut() {
            *x /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (x, y) in m[r].iter_mut().zip(pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn select(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    rows.iter().map(|&i| cols.iter().map(|&j| m[i][j]).collect()).collect()
}

/// Schur complement by eliminating the nodes outside `alpha` one pivot at a
/// time, in the given order.
pub fn eliminate_sequentially(m: &Mat, alpha: &[usize], order: &[usize]) -> Mat {
    let mut m = m.clone();
    let n = m.len();
    let mut alive: Vec<bool> = vec![true; n];
    for &k in order {
        let d = m[k][k];
        for i in 0..n {
            if !alive[i] || i == k {
                continue;
            }
            let f = m[i][k] / d;
            if f != 0.0 {
                for j in 0..n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        alive[k] = false;
    }
    let mut kept: Vec<usize> = alpha.to_vec();
    kept.sort_unstable();
    select(&m, &kept, &kept)
}

/// `W^(2^k)` by repeated squaring, for `2^k >= steps`.
pub fn matrix_power(w: &Mat, steps: u64) -> Mat {
    let mut p = w.clone();
    let mut done = 1u64;
    while done < steps {
        p = mat_mul(&p, &p);
        done *= 2;
    }
    p
}

// ------------------------------------------------------------- Kron helpers

/// A random valid reduction set: every source, every oblivious iSCC member
/// and a random subset of the other agents.
pub fn random_alpha<R: Rng>(rng: &mut R, r: &fjcluster::RMatrix, classes: &fjcluster::AgentClasses) -> Vec<usize> {
    let n = r.agent_count();
    let iscc: BTreeSet<usize> = classes.oblivious_isccs().iter().flatten().copied().collect();
    let mut alpha: Vec<usize> = (0..n).filter(|v| iscc.contains(v) || rng.random_bool(0.4)).collect();
    if alpha.iter().all(|v| iscc.contains(v)) {
        let free: Vec<usize> = (0..n).filter(|v| !iscc.contains(v)).collect();
        if let Some(&v) = free.choose(rng) {
            alpha.push(v);
        }
    }
    alpha.extend(r.source_nodes());
    alpha.sort_unstable();
    alpha
}

/// Solves the reduced system `R/alpha^c z[alpha] = 0` for the kept agents
/// (sources and oblivious iSCC members are known) with the Gauss-Jordan
/// oracle, and returns `(max |x_reduced - x_full|, max |R/alpha^c z[alpha]|)`
/// over the kept agents.
pub fn kron_consistency(
    reduced: &fjcluster::linalg::DenseMatrix,
    alpha: &[usize],
    n: usize,
    sources: &[usize],
    iscc: &BTreeSet<usize>,
    x_full: &[f64],
    x0: &[f64],
) -> (f64, f64) {
    let m = to_mat(reduced);
    let z: Vec<f64> = alpha.iter().map(|&a| if a >= n { x0[sources[a - n]] } else { x_full[a] }).collect();
    let known = |a: usize| a >= n || iscc.contains(&a);
    let u: Vec<usize> = (0..alpha.len()).filter(|&k| !known(alpha[k])).collect();
    let kk: Vec<usize> = (0..alpha.len()).filter(|&k| known(alpha[k])).collect();
    let mut row_resid: f64 = 0.0;
    for &i in &u {
        let s: f64 = (0..alpha.len()).map(|j| m[i][j] * z[j]).sum();
        row_resid = row_resid.max(s.abs());
    }
    if u.is_empty() {
        return (0.0, row_resid);
    }
    let muu = select(&m, &u, &u);
    let muk = select(&m, &u, &kk);
    let zk: Vec<Vec<f64>> = kk.iter().map(|&k| vec![-z[k]]).collect();
    let rhs = if kk.is_empty() { vec![vec![0.0]; u.len()] } else { mat_mul(&muk, &zk) };
    let xu = mat_mul(&inverse(&muu), &rhs);
    let dev = u.iter().zip(&xu).map(|(&i, x)| (x[0] - z[i]).abs()).fold(0.0, f64::max);
    (dev, row_resid)
}

// ----------------------------------------------------------- design specs

/// A random feasible design: agents shuffled into `1..=max_blocks` blocks,
/// about a quarter of them oblivious iSCC blocks. Leaders that could not be
/// reached from two independent sources are made stubborn.
pub fn random_design<R: Rng>(rng: &mut R, max_agents: usize, max_blocks: usize) -> fjcluster::DesignSpec {
    let n = rng.random_range(1..=max_agents);
    let k = rng.random_range(1..=max_blocks.min(n));
    let mut agents: Vec<usize> = (0..n).collect();
    agents.shuffle(rng);
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut blocks = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain([n]) {
        blocks.push(agents[start..c].to_vec());
        start = c;
    }
    let mut ltp: Vec<Option<usize>> =
        blocks.iter().map(|b| if rng.random_bool(0.25) { None } else { Some(*b.choose(rng).unwrap()) }).collect();
    if blocks.len() > 1 && ltp.iter().all(Option::is_none) {
        ltp[0] = Some(blocks[0][0]);
    }
    let mut stubborn: Vec<usize> = ltp.iter().flatten().copied().filter(|_| rng.random_bool(0.5)).collect();
    let mut capacity: usize = blocks.iter().zip(&ltp).filter(|(_, d)| d.is_none()).map(|(b, _)| b.len()).sum();
    capacity += stubborn.len();
    for d in ltp.iter().flatten() {
        if stubborn.contains(d) {
            continue;
        }
        if capacity < 2 {
            stubborn.push(*d);
        }
        capacity += 1;
    }
    let density = rng.random_range(0.0..0.6);
    fjcluster::DesignSpec::new(blocks, ltp, stubborn, vec![], rng.random(), density).unwrap()
}
