//! Stubborn / oblivious / influential classification and influencer sets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{mask_to_set, reach_mask, Digraph, SccDecomposition};

/// Per-agent stubbornness `beta_i` in `[0, 1]` and initial opinion `x_i(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    beta: Vec<f64>,
    x0: Vec<f64>,
}

impl AgentProfile {
    pub fn new(beta: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        if beta.len() != x0.len() {
            return Err(Error::InvalidProfile(format!(
                "beta has {} entries but x0 has {}",
                beta.len(),
                x0.len()
            )));
        }
        if let Some(i) = beta.iter().position(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::InvalidProfile(format!("beta[{i}] = {} is outside [0, 1]", beta[i])));
        }
        if let Some(i) = x0.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile(format!("x0[{i}] is not finite")));
        }
        Ok(Self { beta, x0 })
    }

    /// All agents non-stubborn (pure DeGroot averaging).
    pub fn degroot(x0: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0; x0.len()], x0)
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn is_stubborn(&self, i: usize) -> bool {
        self.beta[i] > 0.0
    }

    pub fn stubborn(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_stubborn(i)).collect()
    }

    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.beta.clone(), x0)
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::InvalidProfile(format!(
                "profile covers {} agents, graph has {n}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Classification of every agent of a weakly connected network.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentClasses {
    stubborn: Vec<bool>,
    oblivious: Vec<bool>,
    influential: Vec<bool>,
    scc: SccDecomposition,
    oblivious_isccs: Vec<Vec<usize>>,
}

impl AgentClasses {
    pub fn node_count(&self) -> usize {
        self.stubborn.len()
    }

    pub fn is_stubborn(&self, i: usize) -> bool {
        self.stubborn[i]
    }

    pub fn is_oblivious(&self, i: usize) -> bool {
        self.oblivious[i]
    }

    pub fn is_influential(&self, i: usize) -> bool {
        self.influential[i]
    }

    pub fn stubborn(&self) -> BTreeSet<usize> {
        mask_to_set(&self.stubborn)
    }

    pub fn oblivious(&self) -> BTreeSet<usize> {
        mask_to_set(&self.oblivious)
    }

    pub fn influential(&self) -> BTreeSet<usize> {
        mask_to_set(&self.influential)
    }

    pub fn has_oblivious(&self) -> bool {
        self.oblivious.iter().any(|&o| o)
    }

    /// iSCCs made of oblivious agents, each sorted.
    pub fn oblivious_isccs(&self) -> &[Vec<usize>] {
        &self.oblivious_isccs
    }

    pub fn scc(&self) -> &SccDecomposition {
        &self.scc
    }
}

/// Splits agents into stubborn, oblivious and influential sets.
///
/// An agent is oblivious when it is not stubborn and no stubborn agent has a
/// path to it; influential agents are the stubborn ones plus the members of
/// iSCCs made entirely of oblivious agents.
pub fn classify_agents(g: &Digraph, profile: &AgentProfile) -> Result<AgentClasses> {
    let n = g.node_count();
    profile.check_size(n)?;
    if !g.is_weakly_connected() {
        return Err(Error::NotWeaklyConnected);
    }
    let stubborn: Vec<bool> = (0..n).map(|i| profile.is_stubborn(i)).collect();
    let touched = reach_mask(n, profile.stubborn(), |v| g.out_neighbors(v).iter().copied());
    let oblivious: Vec<bool> = touched.iter().map(|t| !t).collect();

    let scc = g.scc_decompose();
    let mut influential = stubborn.clone();
    let mut oblivious_isccs = Vec::new();
    for c in scc.independent_components() {
        let members = &scc.components()[c];
        // a stubborn member reaches the whole component, so an iSCC is either
        // all-oblivious or oblivious-free
        if members.iter().all(|&v| oblivious[v]) {
            for &v in members {
                influential[v] = true;
            }
            oblivious_isccs.push(members.clone());
        }
    }
    Ok(AgentClasses { stubborn, oblivious, influential, scc, oblivious_isccs })
}

/// `I_q`: influential agents with a directed path to `q` (`q` itself when
/// influential, via the length-0 path).
pub fn influencers_of(g: &Digraph, classes: &AgentClasses, q: usize) -> BTreeSet<usize> {
    g.reaching(q)
        .into_iter()
        .enumerate()
        .filter(|&(s, reaches)| reaches && classes.is_influential(s))
        .map(|(s, _)| s)
        .collect()
}
