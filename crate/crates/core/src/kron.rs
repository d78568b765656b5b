//! The augmented Laplacian `R` of the steady-state equations and its Kron
//! reduction (Schur complement).
//!
//! With `m` stubborn agents relabelled as sources `n..n+m`, the steady state
//! satisfies `R z = 0` for `z = [x*; x_s(0)]` and
//!
//! ```text
//!     R = [ I - (I - beta) W   -eta ]
//!         [        0             0  ]
//! ```
//!
//! Eliminating a node set `alpha^c` gives `R/alpha^c`, a smaller Laplacian
//! relating the kept final opinions to the stubborn initial opinions.

use std::collections::BTreeSet;

use crate::classify::{AgentClasses, AgentProfile};
use crate::error::{Error, Result};
use crate::graph::{reach_mask, Digraph};
use crate::linalg::{neumann_sum, solve, DenseMatrix, NEUMANN_TOL};

/// Entries below this fraction of the row's largest magnitude count as zero
/// when certifying a reduced row.
pub const ZERO_THRESHOLD: f64 = 1e-9;
pub const LAPLACIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    matrix: DenseMatrix,
    n: usize,
    sources: Vec<usize>,
}

impl RMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// Stubborn agent behind each source, in source order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// Matrix index of the source node of stubborn agent `agent`.
    pub fn source_node(&self, agent: usize) -> Option<usize> {
        self.sources.iter().position(|&s| s == agent).map(|k| self.n + k)
    }

    pub fn source_nodes(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.sources.len()
    }

    /// The `n x m` stubbornness placement block `eta`.
    pub fn eta(&self) -> DenseMatrix {
        -self.matrix.view((0, self.n), (self.n, self.sources.len())).clone_owned()
    }

    /// Whether `R/alpha^c` is well defined: every eliminated node is reached
    /// from `alpha` in `G(R)`.
    pub fn valid_alpha(&self, alpha: &[usize]) -> bool {
        alpha_is_valid(&self.matrix, alpha)
    }

    pub fn reduce(&self, alpha: &[usize]) -> Result<KronResult> {
        schur(&self.matrix, alpha, self.n)
    }
}

pub fn build_r(g: &Digraph, profile: &AgentProfile) -> Result<RMatrix> {
    g.require_row_stochastic()?;
    let n = g.node_count();
    profile.check_size(n)?;
    let sources = profile.stubborn();
    if sources.is_empty() {
        return Err(Error::NoStubbornAgents);
    }
    let m = sources.len();
    let beta = profile.beta();
    let w = g.weights();
    let mut r = DenseMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = -(1.0 - beta[i]) * w[(i, j)];
        }
        r[(i, i)] += 1.0;
    }
    for (k, &s) in sources.iter().enumerate() {
        r[(s, n + k)] = -beta[s];
    }
    Ok(RMatrix { matrix: r, n, sources })
}

/// `G(M)` has an edge `i -> j` whenever `m_ji < 0`.
fn induced_graph(m: &DenseMatrix) -> Vec<Vec<usize>> {
    let size = m.nrows();
    (0..size)
        .map(|i| (0..size).filter(|&j| j != i && m[(j, i)] < 0.0).collect())
        .collect()
}

pub fn alpha_is_valid(m: &DenseMatrix, alpha: &[usize]) -> bool {
    let size = m.nrows();
    if alpha.iter().any(|&a| a >= size) {
        return false;
    }
    let g = induced_graph(m);
    reach_mask(size, alpha.iter().copied(), |v| g[v].iter().copied())
        .into_iter()
        .all(|b| b)
}

/// A Kron-reduced matrix and the bookkeeping of what was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct KronResult {
    reduced: DenseMatrix,
    alpha: Vec<usize>,
    omega: Vec<usize>,
    eliminated: Vec<usize>,
}

impl KronResult {
    /// `R/alpha^c`, rows and columns ordered as [`alpha`](Self::alpha).
    pub fn reduced(&self) -> &DenseMatrix {
        &self.reduced
    }

    /// Kept nodes, ascending.
    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    /// Kept agents (sources removed).
    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.alpha.iter().position(|&a| a == node)
    }

    fn relabel(mut self, labels: &[usize]) -> Self {
        for v in self.alpha.iter_mut().chain(self.omega.iter_mut()).chain(self.eliminated.iter_mut()) {
            *v = labels[*v];
        }
        self
    }
}

fn split(size: usize, alpha: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let kept: BTreeSet<usize> = alpha.iter().copied().collect();
    if let Some(&bad) = kept.iter().find(|&&a| a >= size) {
        return Err(Error::Precondition(format!("alpha index {bad} out of range")));
    }
    let rest = (0..size).filter(|i| !kept.contains(i)).collect();
    Ok((kept.into_iter().collect(), rest))
}

/// `M/alpha^c = M[alpha] - M[alpha, alpha^c] M[alpha^c]^{-1} M[alpha^c, alpha]`.
///
/// Nodes with index `>= agents` are treated as sources and left out of
/// `omega`.
pub fn schur(m: &DenseMatrix, alpha: &[usize], agents: usize) -> Result<KronResult> {
    let (alpha, rest) = split(m.nrows(), alpha)?;
    let keep = m.select_rows(&alpha).select_columns(&alpha);
    let reduced = if rest.is_empty() {
        keep
    } else {
        let block = m.select_rows(&rest).select_columns(&rest);
        let down = m.select_rows(&rest).select_columns(&alpha);
        let across = m.select_rows(&alpha).select_columns(&rest);
        let x = solve(&block, &down)?;
        keep - across * x
    };
    let omega = alpha.iter().copied().filter(|&a| a < agents).collect();
    Ok(KronResult { reduced, alpha, omega, eliminated: rest })
}

/// `M[alpha^c]^{-1}` from the Neumann series of `I - M[alpha^c]`.
pub fn eliminated_inverse_neumann(m: &DenseMatrix, alpha: &[usize]) -> Result<DenseMatrix> {
    let (_, rest) = split(m.nrows(), alpha)?;
    let block = m.select_rows(&rest).select_columns(&rest);
    let k = rest.len();
    neumann_sum(&(DenseMatrix::identity(k, k) - block), NEUMANN_TOL)
}

/// `M[alpha^c]^{-1}` by direct solve.
pub fn eliminated_inverse_direct(m: &DenseMatrix, alpha: &[usize]) -> Result<DenseMatrix> {
    let (_, rest) = split(m.nrows(), alpha)?;
    let block = m.select_rows(&rest).select_columns(&rest);
    let k = rest.len();
    solve(&block, &DenseMatrix::identity(k, k))
}

/// The `q`-row of a reduction kept on `{p, q} ∪ ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relation {
    pub coeff_p: f64,
    pub coeff_q: f64,
    /// The row is `(-c, c)` on `(p, q)` with `c > 0` and zero elsewhere,
    /// which forces `x*_p = x*_q`.
    pub certified: bool,
}

pub fn reduced_relation(k: &KronResult, p: usize, q: usize) -> Result<Relation> {
    if p == q {
        return Err(Error::Precondition("p and q must differ".into()));
    }
    let (Some(pp), Some(pq)) = (k.position(p), k.position(q)) else {
        return Err(Error::Precondition(format!("both {p} and {q} must be kept")));
    };
    let row = k.reduced.row(pq);
    let (coeff_p, coeff_q) = (row[pp], row[pq]);
    let scale = row.amax();
    let certified = scale > 0.0
        && coeff_q > 0.0
        && ((coeff_p + coeff_q) / scale).abs() <= ZERO_THRESHOLD
        && row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != pp && j != pq)
            .all(|(_, x)| (x / scale).abs() <= ZERO_THRESHOLD);
    Ok(Relation { coeff_p, coeff_q, certified })
}

/// Zero row sums, nonnegative diagonal, nonpositive off-diagonal.
pub fn is_laplacian(m: &DenseMatrix, tol: f64) -> bool {
    m.is_square()
        && m.row_iter().enumerate().all(|(i, row)| {
            row.sum().abs() <= tol
                && row.iter().enumerate().all(|(j, &x)| if i == j { x >= -tol } else { x <= tol })
        })
}

/// Kron-certifies `x*_p = x*_q` for a candidate LTP pair.
///
/// Pairs of non-oblivious agents are reduced on the full `R` with
/// `alpha = {p, q} ∪ sources ∪ oblivious iSCC members`. Oblivious pairs are
/// reduced on the oblivious block `I - W11` with `alpha = {p, q} ∪ oblivious
/// iSCC members`. The returned [`KronResult`] is labelled with agent indices
/// (sources as `n + k`).
pub fn certify_pair(
    g: &Digraph,
    profile: &AgentProfile,
    classes: &AgentClasses,
    p: usize,
    q: usize,
) -> Result<(KronResult, Relation)> {
    if p == q {
        return Err(Error::Precondition("p and q must differ".into()));
    }
    let iscc_members = classes.oblivious_isccs().iter().flatten().copied();
    if classes.is_oblivious(p) || classes.is_oblivious(q) {
        if !(classes.is_oblivious(p) && classes.is_oblivious(q)) {
            return Err(Error::Precondition(format!(
                "agents {p} and {q} are not both oblivious"
            )));
        }
        g.require_row_stochastic()?;
        let block: Vec<usize> = classes.oblivious().into_iter().collect();
        let local = |v: usize| block.binary_search(&v).expect("oblivious agent");
        let w = g.weights().select_rows(&block).select_columns(&block);
        let k = block.len();
        let r_o = DenseMatrix::identity(k, k) - w;
        let alpha: Vec<usize> = iscc_members.chain([p, q]).map(local).collect();
        let kron = schur(&r_o, &alpha, k)?.relabel(&block);
        let rel = reduced_relation(&kron, p, q)?;
        Ok((kron, rel))
    } else {
        let r = build_r(g, profile)?;
        let alpha: Vec<usize> = iscc_members.chain([p, q]).chain(r.source_nodes()).collect();
        let kron = r.reduce(&alpha)?;
        let rel = reduced_relation(&kron, p, q)?;
        Ok((kron, rel))
    }
}
