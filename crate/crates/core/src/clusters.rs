//! Predicted and observed opinion clusters, refinement checks and
//! randomized weight/stubbornness trials.

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

use crate::classify::{classify_agents, AgentClasses, AgentProfile};
use crate::dynamics::{convergence_of, steady_state_with, Convergence};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kron::certify_pair;
use crate::ltp::{analyze, PersuasionReport};
use crate::random::{random_beta, random_opinions, redraw_weights, trial_rng};

/// Default single-linkage gap for grouping steady-state opinions.
pub const GROUPING_TOL: f64 = 1e-6;
/// Relative tolerance on `|x*_p - x*_q|` for a persuaded pair.
pub const PAIR_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Predicted,
    Empirical,
}

/// A partition of the agents into blocks, each sorted, ordered by first
/// member.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    blocks: Vec<Vec<usize>>,
    values: Option<Vec<f64>>,
    provenance: Provenance,
    block_of: Vec<usize>,
}

impl ClusterSet {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>, provenance: Provenance) -> Result<Self> {
        Self::assemble(n, blocks, None, provenance)
    }

    fn assemble(
        n: usize,
        mut blocks: Vec<Vec<usize>>,
        values: Option<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::Precondition("cluster blocks must be non-empty".into()));
        }
        order.sort_by_key(|&i| blocks[i][0]);
        let values = values.map(|v| order.iter().map(|&i| v[i]).collect());
        let blocks: Vec<Vec<usize>> = order.into_iter().map(|i| std::mem::take(&mut blocks[i])).collect();
        let mut block_of = vec![usize::MAX; n];
        for (k, b) in blocks.iter().enumerate() {
            for &v in b {
                if v >= n || block_of[v] != usize::MAX {
                    return Err(Error::Precondition(format!("blocks do not partition 0..{n} (agent {v})")));
                }
                block_of[v] = k;
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::Precondition(format!("agent {v} is in no block")));
        }
        Ok(Self { blocks, values, provenance, block_of })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Mean opinion per block, for empirical clusters.
    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn node_count(&self) -> usize {
        self.block_of.len()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, agent: usize) -> usize {
        self.block_of[agent]
    }

    /// Whether block `k` asserts anything. Predicted singletons make no
    /// claim: the prediction is sufficient, not necessary.
    pub fn is_claim(&self, k: usize) -> bool {
        self.provenance == Provenance::Empirical || self.blocks[k].len() > 1
    }
}

/// Single-linkage grouping of `x` along the real line: sorted neighbours
/// closer than `tol` share a block.
pub fn empirical_clusters(x: &[f64], tol: f64) -> Result<ClusterSet> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("opinion {i} is not finite")));
    }
    if !(tol >= 0.0) {
        return Err(Error::Precondition(format!("grouping tolerance must be nonnegative, got {tol}")));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for i in order {
        match blocks.last_mut() {
            Some(b) if x[i] - prev <= tol => b.push(i),
            _ => blocks.push(vec![i]),
        }
        prev = x[i];
    }
    let values = blocks.iter().map(|b| b.iter().map(|&i| x[i]).sum::<f64>() / b.len() as f64).collect();
    ClusterSet::assemble(x.len(), blocks, Some(values), Provenance::Empirical)
}

/// Merges every LTP agent with its persuaded set and every all-oblivious
/// iSCC into one block.
pub fn predicted_from(classes: &AgentClasses, report: &PersuasionReport) -> Result<ClusterSet> {
    let n = classes.node_count();
    let mut uf = UnionFind::<usize>::new(n);
    for (&p, np) in report.ltp() {
        for &q in np {
            uf.union(p, q);
        }
    }
    for members in classes.oblivious_isccs() {
        for &v in &members[1..] {
            uf.union(members[0], v);
        }
    }
    let labels = uf.into_labeling();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for v in 0..n {
        let root = labels[v];
        if index[root] == usize::MAX {
            index[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[index[root]].push(v);
    }
    ClusterSet::new(n, blocks, Provenance::Predicted)
}

pub fn predicted_clusters(g: &Digraph, p: &AgentProfile) -> Result<ClusterSet> {
    let classes = classify_agents(g, p)?;
    if let Convergence::PeriodicIscc(c) = convergence_of(g, &classes)? {
        return Err(Error::PeriodicIscc(c));
    }
    let report = analyze(g, &classes)?;
    predicted_from(&classes, &report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// The first claimed predicted block split across empirical blocks.
    pub violation: Option<Vec<usize>>,
}

impl Refinement {
    pub fn refines(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn verify_refinement(predicted: &ClusterSet, empirical: &ClusterSet) -> Result<Refinement> {
    if predicted.node_count() != empirical.node_count() {
        return Err(Error::Dimension(format!(
            "partitions cover {} and {} agents",
            predicted.node_count(),
            empirical.node_count()
        )));
    }
    let violation = predicted
        .blocks()
        .iter()
        .enumerate()
        .filter(|&(k, _)| predicted.is_claim(k))
        .map(|(_, b)| b)
        .find(|b| b.iter().any(|&v| empirical.block_of(v) != empirical.block_of(b[0])))
        .cloned();
    Ok(Refinement { violation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOptions {
    pub grouping_tol: f64,
    /// Also require a Kron certificate for every persuaded pair.
    pub certify: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self { grouping_tol: GROUPING_TOL, certify: false }
    }
}

/// A failing trial, kept verbatim for reproduction.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub trial: usize,
    pub graph: Digraph,
    pub profile: AgentProfile,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub passed: usize,
    pub total: usize,
    /// Lowest-indexed failing trial, if any.
    pub counterexample: Option<Counterexample>,
}

impl TrialReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

/// Checks one weighted instance: the persuaded pairs agree at steady state,
/// predicted clusters refine the observed ones and, optionally, each pair is
/// Kron-certified.
pub fn check_instance(g: &Digraph, p: &AgentProfile, opts: &TrialOptions) -> Result<std::result::Result<(), String>> {
    let classes = classify_agents(g, p)?;
    let report = analyze(g, &classes)?;
    let ss = steady_state_with(g, p, &classes)?;
    let x = ss.x_star();
    for (&lp, np) in report.ltp() {
        for &q in np {
            if (x[lp] - x[q]).abs() > PAIR_TOL * (1.0 + x[lp].abs()) {
                return Ok(Err(format!(
                    "x*[{lp}] = {} and x*[{q}] = {} differ although {q} is persuaded by {lp}",
                    x[lp], x[q]
                )));
            }
            if opts.certify {
                let (_, rel) = certify_pair(g, p, &classes, lp, q)?;
                if !rel.certified {
                    return Ok(Err(format!(
                        "reduced row of {q} is not (-c, c) on ({lp}, {q}): ({}, {})",
                        rel.coeff_p, rel.coeff_q
                    )));
                }
            }
        }
    }
    let predicted = predicted_from(&classes, &report)?;
    let empirical = empirical_clusters(x, opts.grouping_tol)?;
    if let Some(b) = verify_refinement(&predicted, &empirical)?.violation {
        return Ok(Err(format!("predicted block {b:?} is split at steady state")));
    }
    Ok(Ok(()))
}

/// Runs `trials` independent redraws of weights, stubbornness (on the fixed
/// set `stubborn`) and initial opinions over the topology of `g`.
pub fn robustness_trials(
    g: &Digraph,
    stubborn: &[usize],
    trials: usize,
    seed: u64,
    opts: &TrialOptions,
) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let n = g.node_count();
    if let Some(&s) = stubborn.iter().find(|&&s| s >= n) {
        return Err(Error::Precondition(format!("stubborn agent {s} out of range")));
    }
    let base = AgentProfile::new(
        (0..n).map(|i| if stubborn.contains(&i) { 0.5 } else { 0.0 }).collect(),
        vec![0.0; n],
    )?;
    let classes = classify_agents(g, &base)?;
    if let Convergence::PeriodicIscc(c) = convergence_of(g, &classes)? {
        return Err(Error::PeriodicIscc(c));
    }

    let outcomes: Vec<Option<Counterexample>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let mut run = || -> Result<(Digraph, AgentProfile, std::result::Result<(), String>)> {
                let h = redraw_weights(g, &mut rng)?;
                let beta = random_beta(n, stubborn, &mut rng);
                let x0 = random_opinions(n, &mut rng);
                let p = AgentProfile::new(beta, x0)?;
                let verdict = check_instance(&h, &p, opts)?;
                Ok((h, p, verdict))
            };
            match run() {
                Ok((_, _, Ok(()))) => None,
                Ok((graph, profile, Err(reason))) => Some(Counterexample { trial: t, graph, profile, reason }),
                Err(e) => Some(Counterexample {
                    trial: t,
                    graph: g.clone(),
                    profile: base.clone(),
                    reason: format!("trial {t} raised: {e}"),
                }),
            }
        })
        .collect();
    let passed = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(TrialReport { passed, total: trials, counterexample: outcomes.into_iter().flatten().next() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::steady_state;
    use crate::fixtures;

    fn one_based(c: &ClusterSet) -> Vec<Vec<usize>> {
        c.blocks().iter().map(|b| b.iter().map(|v| v + 1).collect()).collect()
    }

    #[test]
    fn grouping_examples() {
        let c = empirical_clusters(&[1.0, 1.0, 1.0], GROUPING_TOL).unwrap();
        assert_eq!(c.blocks(), &[vec![0, 1, 2]]);
        assert_eq!(c.values(), Some(&[1.0][..]));
        let c = empirical_clusters(&[0.0, 1e-8, 5.0], GROUPING_TOL).unwrap();
        assert_eq!(c.blocks(), &[vec![0, 1], vec![2]]);
        let c = empirical_clusters(&[5.0, 0.0, 5.0], GROUPING_TOL).unwrap();
        assert_eq!(c.blocks(), &[vec![0, 2], vec![1]]);
        assert!(empirical_clusters(&[f64::NAN], GROUPING_TOL).is_err());
    }

    #[test]
    fn fixture_predictions() {
        let (g, p) = fixtures::fixture_a();
        let c = predicted_clusters(&g, &p).unwrap();
        assert_eq!(one_based(&c), vec![vec![1, 6], vec![2], vec![3, 4, 5]]);
        assert!(!c.is_claim(1));

        let (g, p) = fixtures::fixture_a_prime();
        let c = predicted_clusters(&g, &p).unwrap();
        assert_eq!(one_based(&c), vec![vec![1, 6], vec![2], vec![3, 4], vec![5]]);

        let (g, p) = fixtures::fixture_b();
        let c = predicted_clusters(&g, &p).unwrap();
        assert_eq!(one_based(&c), vec![vec![1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn fixture_a_observed() {
        let (g, p) = fixtures::fixture_a();
        let x = steady_state(&g, &p).unwrap();
        let c = empirical_clusters(x.x_star(), GROUPING_TOL).unwrap();
        assert_eq!(one_based(&c), vec![vec![1, 6], vec![2], vec![3, 4, 5]]);
    }

    #[test]
    fn refinement_examples() {
        let (g, p) = fixtures::fixture_b();
        let pred = predicted_clusters(&g, &p).unwrap();
        assert!(verify_refinement(&pred, &pred).unwrap().refines());
        let x = steady_state(&g, &p).unwrap();
        let emp = empirical_clusters(x.x_star(), GROUPING_TOL).unwrap();
        assert_eq!(emp.len(), 1);
        assert!(verify_refinement(&pred, &emp).unwrap().refines());

        let pred = ClusterSet::new(2, vec![vec![0, 1]], Provenance::Predicted).unwrap();
        let emp = ClusterSet::new(2, vec![vec![0], vec![1]], Provenance::Empirical).unwrap();
        let v = verify_refinement(&pred, &emp).unwrap();
        assert_eq!(v.violation, Some(vec![0, 1]));
        let bigger = ClusterSet::new(3, vec![vec![0, 1, 2]], Provenance::Empirical).unwrap();
        assert!(verify_refinement(&pred, &bigger).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(ClusterSet::new(3, vec![vec![0, 1], vec![1, 2]], Provenance::Predicted).is_err());
        assert!(ClusterSet::new(3, vec![vec![0, 1]], Provenance::Predicted).is_err());
        assert!(ClusterSet::new(2, vec![vec![0, 1], vec![]], Provenance::Predicted).is_err());
        let c = ClusterSet::new(3, vec![vec![2, 1], vec![0]], Provenance::Predicted).unwrap();
        assert_eq!(c.blocks(), &[vec![0], vec![1, 2]]);
        assert_eq!(c.block_of(2), 1);
    }

    #[test]
    fn trials_on_fixtures() {
        let opts = TrialOptions { certify: true, ..Default::default() };
        for (g, p) in [fixtures::fixture_a(), fixtures::fixture_a_prime()] {
            let r = robustness_trials(&g, &p.stubborn(), 100, 11, &opts).unwrap();
            assert_eq!((r.passed, r.total), (100, 100), "{:?}", r.counterexample.map(|c| c.reason));
        }
        let (g, p) = fixtures::fixture_b();
        let r = robustness_trials(&g, &p.stubborn(), 50, 3, &opts).unwrap();
        assert!(r.all_passed());
        assert_eq!(robustness_trials(&g, &[], 0, 3, &opts).unwrap_err(), Error::NoTrials);
    }

    #[test]
    fn trials_are_reproducible() {
        let (g, p) = fixtures::fixture_a();
        let a = robustness_trials(&g, &p.stubborn(), 10, 5, &TrialOptions::default()).unwrap();
        let b = robustness_trials(&g, &p.stubborn(), 10, 5, &TrialOptions::default()).unwrap();
        assert_eq!((a.passed, a.total), (b.passed, b.total));
    }
}
