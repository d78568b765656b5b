//! Friedkin-Johnsen iteration `x(k+1) = (I - beta) W x(k) + beta x(0)` and
//! its closed-form limit.

use crate::classify::{classify_agents, AgentClasses, AgentProfile};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::linalg::{inf_norm, solve_vec, stochastic_power_limit, DenseMatrix, POWER_ITERATION_TOL};

pub const SIMULATION_TOL: f64 = 1e-10;
pub const SIMULATION_MAX_ITER: usize = 1_000_000;
/// Trajectories keep every step up to this many recorded rows, then thin out.
pub const FULL_HISTORY_LIMIT: usize = 100_000;
pub const STEADY_STATE_RESIDUAL_TOL: f64 = 1e-7;

/// One synchronous update.
pub fn fj_step(g: &Digraph, p: &AgentProfile, x: &[f64]) -> Result<Vec<f64>> {
    let n = g.node_count();
    p.check_size(n)?;
    if x.len() != n {
        return Err(Error::Dimension(format!("state has length {}, expected {n}", x.len())));
    }
    Ok(step(g, p.beta(), p.x0(), x))
}

fn step(g: &Digraph, beta: &[f64], x0: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let avg: f64 = g.in_neighbors(i).iter().map(|&(j, w)| w * x[j]).sum();
            (1.0 - beta[i]) * avg + beta[i] * x0[i]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convergence {
    Converges,
    /// All-oblivious iSCCs whose period exceeds one.
    PeriodicIscc(Vec<Vec<usize>>),
}

impl Convergence {
    pub fn converges(&self) -> bool {
        matches!(self, Convergence::Converges)
    }
}

pub fn convergence_check(g: &Digraph, p: &AgentProfile) -> Result<Convergence> {
    let classes = classify_agents(g, p)?;
    convergence_of(g, &classes)
}

pub fn convergence_of(g: &Digraph, classes: &AgentClasses) -> Result<Convergence> {
    let scc = classes.scc();
    let mut periodic = Vec::new();
    for members in classes.oblivious_isccs() {
        if !g.is_aperiodic(scc, scc.component_of(members[0]))? {
            periodic.push(members.clone());
        }
    }
    Ok(if periodic.is_empty() { Convergence::Converges } else { Convergence::PeriodicIscc(periodic) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    steps: Vec<usize>,
    states: Vec<Vec<f64>>,
    deltas: Vec<f64>,
    converged: bool,
    final_step: usize,
    final_state: Vec<f64>,
}

impl Trajectory {
    /// Step index of each recorded row; always starts at 0 and ends at
    /// [`final_step`](Self::final_step).
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// `max_i |x_i(k+1) - x_i(k)|` for every step taken.
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn final_step(&self) -> usize {
        self.final_step
    }

    pub fn final_state(&self) -> &[f64] {
        &self.final_state
    }
}

struct Recorder {
    stride: usize,
    steps: Vec<usize>,
    states: Vec<Vec<f64>>,
}

impl Recorder {
    fn push(&mut self, k: usize, x: &[f64]) {
        if !k.is_multiple_of(self.stride) {
            return;
        }
        self.steps.push(k);
        self.states.push(x.to_vec());
        if self.steps.len() >= FULL_HISTORY_LIMIT {
            self.stride *= 2;
            let stride = self.stride;
            let mut keep = self.steps.iter().map(|&s| s % stride == 0);
            self.states.retain(|_| keep.next().unwrap_or(false));
            self.steps.retain(|&s| s % stride == 0);
        }
    }

    fn finish(&mut self, k: usize, x: &[f64]) {
        if self.steps.last() != Some(&k) {
            self.steps.push(k);
            self.states.push(x.to_vec());
        }
    }
}

/// Iterates until the largest per-step change is at most `tol` or
/// `max_iter` steps have been taken. Networks with a periodic oblivious
/// iSCC are rejected up front with [`Error::PeriodicIscc`].
pub fn simulate(g: &Digraph, p: &AgentProfile, tol: f64, max_iter: usize) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    g.require_row_stochastic()?;
    if let Convergence::PeriodicIscc(c) = convergence_check(g, p)? {
        return Err(Error::PeriodicIscc(c));
    }
    let (beta, x0) = (p.beta(), p.x0());
    let mut rec = Recorder { stride: 1, steps: Vec::new(), states: Vec::new() };
    let mut x = x0.to_vec();
    let mut deltas = Vec::new();
    rec.push(0, &x);
    let mut k = 0;
    let mut converged = false;
    while k < max_iter {
        let next = step(g, beta, x0, &x);
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        k += 1;
        deltas.push(delta);
        rec.push(k, &x);
        if delta <= tol {
            converged = true;
            break;
        }
    }
    rec.finish(k, &x);
    Ok(Trajectory {
        steps: rec.steps,
        states: rec.states,
        deltas,
        converged,
        final_step: k,
        final_state: x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Simulated,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Simulated => "simulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    x_star: Vec<f64>,
    method: Method,
    oblivious: Vec<usize>,
    w11_star: Option<DenseMatrix>,
    residual: f64,
}

impl SteadyState {
    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Oblivious agents, in the order used for the rows of
    /// [`w11_star`](Self::w11_star).
    pub fn oblivious(&self) -> &[usize] {
        &self.oblivious
    }

    /// `lim W11^k` over the oblivious block, when there is one.
    pub fn w11_star(&self) -> Option<&DenseMatrix> {
        self.w11_star.as_ref()
    }

    /// `||x* - (I - beta) W x* - beta x(0)||_inf`.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

pub fn fixed_point_residual(g: &Digraph, p: &AgentProfile, x: &[f64]) -> f64 {
    let next = step(g, p.beta(), p.x0(), x);
    next.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn checked(state: SteadyState) -> Result<SteadyState> {
    if !(state.residual <= STEADY_STATE_RESIDUAL_TOL) {
        return Err(Error::Residual(state.residual));
    }
    Ok(state)
}

pub fn steady_state(g: &Digraph, p: &AgentProfile) -> Result<SteadyState> {
    g.require_row_stochastic()?;
    let classes = classify_agents(g, p)?;
    steady_state_with(g, p, &classes)
}

/// Closed-form steady state for already-classified agents.
pub fn steady_state_with(g: &Digraph, p: &AgentProfile, classes: &AgentClasses) -> Result<SteadyState> {
    g.require_row_stochastic()?;
    if let Convergence::PeriodicIscc(c) = convergence_of(g, classes)? {
        return Err(Error::PeriodicIscc(c));
    }
    let n = g.node_count();
    let (beta, x0) = (p.beta(), p.x0());
    let w = g.weights();

    let oblivious: Vec<usize> = classes.oblivious().into_iter().collect();
    let rest: Vec<usize> = (0..n).filter(|&i| !classes.is_oblivious(i)).collect();
    let mut x = vec![0.0; n];
    let mut w11_star = None;

    if !oblivious.is_empty() {
        let w11 = w.select_rows(&oblivious).select_columns(&oblivious);
        let limit = stochastic_power_limit(&w11, POWER_ITERATION_TOL)?;
        let x1_0 = nalgebra::DVector::from_iterator(oblivious.len(), oblivious.iter().map(|&i| x0[i]));
        let x1 = &limit * x1_0;
        for (k, &i) in oblivious.iter().enumerate() {
            x[i] = x1[k];
        }
        w11_star = Some(limit);
    }
    if !rest.is_empty() {
        let k = rest.len();
        let mut a = DenseMatrix::identity(k, k);
        let mut rhs = vec![0.0; k];
        for (r, &i) in rest.iter().enumerate() {
            let keep = 1.0 - beta[i];
            for &(j, wij) in g.in_neighbors(i) {
                if classes.is_oblivious(j) {
                    rhs[r] += keep * wij * x[j];
                } else {
                    let c = rest.binary_search(&j).expect("non-oblivious agent");
                    a[(r, c)] -= keep * wij;
                }
            }
            rhs[r] += beta[i] * x0[i];
        }
        let x2 = solve_vec(&a, &rhs)?;
        for (r, &i) in rest.iter().enumerate() {
            x[i] = x2[r];
        }
    }
    let residual = fixed_point_residual(g, p, &x);
    checked(
        SteadyState { x_star: x, method: Method::ClosedForm, oblivious, w11_star, residual },
    )
}

/// Steady state taken from the end of a converged simulation.
pub fn steady_state_simulated(g: &Digraph, p: &AgentProfile, tol: f64, max_iter: usize) -> Result<SteadyState> {
    let traj = simulate(g, p, tol, max_iter)?;
    if !traj.converged() {
        return Err(Error::NoConvergence(traj.final_step()));
    }
    let x = traj.final_state;
    let residual = fixed_point_residual(g, p, &x);
    let classes = classify_agents(g, p)?;
    checked(
        SteadyState {
            x_star: x,
            method: Method::Simulated,
            oblivious: classes.oblivious().into_iter().collect(),
            w11_star: None,
            residual,
        },
    )
}

/// `||L W - L||_inf`, how far `L` is from being a fixed point of `W`.
pub fn projection_residual(limit: &DenseMatrix, w: &DenseMatrix) -> f64 {
    inf_norm(&(limit * w - limit))
}
