//! Python bindings. Agents are numbered from 1, as in the JSON format and the
//! command-line tool.

use std::collections::BTreeMap;

use fjcluster::clusters::{
    empirical_clusters as empirical, predicted_from, robustness_trials, verify_refinement, TrialOptions,
    GROUPING_TOL,
};
use fjcluster::design::{synthesize, validate_design};
use fjcluster::dynamics::{
    convergence_of, simulate as run_simulation, steady_state, steady_state_simulated, Convergence,
    SIMULATION_MAX_ITER, SIMULATION_TOL,
};
use fjcluster::graph::ROW_SUM_TOL;
use fjcluster::io::{graph_to_json, parse_graph, to_canonical_string, AgentRecord, EdgeRecord, GraphFile};
use fjcluster::kron::{build_r, certify_pair, is_laplacian, LAPLACIAN_TOL};
use fjcluster::ltp::analyze;
use fjcluster::{classify_agents, AgentProfile, Digraph, DesignSpec, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(fjcluster_py, VerdictError, PyException, "The dynamics have no usable steady state.");

fn err(e: Error) -> PyErr {
    match e {
        Error::PeriodicIscc(c) => VerdictError::new_err(format!("periodic-iscc {:?}", one_based_blocks(&c))),
        Error::NoConvergence(_) | Error::Residual(_) | Error::SingularMatrix | Error::SpectralRadius(_) => {
            VerdictError::new_err(e.to_string())
        }
        e => PyValueError::new_err(e.to_string()),
    }
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn one_based_blocks(blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| one_based(b)).collect()
}

fn zero_based(v: &[usize], n: usize, what: &str) -> PyResult<Vec<usize>> {
    v.iter()
        .map(|&i| {
            if i == 0 || i > n {
                Err(PyValueError::new_err(format!("{what}: agent {i} is outside 1..={n}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

/// A weighted influence network with per-agent stubbornness `beta` and
/// initial opinions `x0`. An edge `(i, j, w)` means agent `j` listens to
/// agent `i` with weight `w`; every agent's in-weights must sum to 1.
#[pyclass(name = "Network", module = "fjcluster_py", frozen)]
struct Network {
    graph: Digraph,
    profile: AgentProfile,
}

impl Network {
    fn checked(graph: Digraph, profile: AgentProfile) -> PyResult<Self> {
        if let Some(d) = graph.validate_row_stochastic(ROW_SUM_TOL).deviations.first() {
            return Err(PyValueError::new_err(format!(
                "in-weights of agent {} sum to {} instead of 1",
                d.row + 1,
                d.sum
            )));
        }
        Ok(Self { graph, profile })
    }
}

#[pymethods]
impl Network {
    #[new]
    #[pyo3(signature = (n, edges, beta=None, x0=None))]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>, beta: Option<Vec<f64>>, x0: Option<Vec<f64>>) -> PyResult<Self> {
        let beta = beta.unwrap_or_else(|| vec![0.0; n]);
        let x0 = x0.unwrap_or_else(|| vec![0.0; n]);
        if beta.len() != n || x0.len() != n {
            return Err(PyValueError::new_err(format!("beta and x0 must have length {n}")));
        }
        let file = GraphFile {
            n,
            edges: edges.into_iter().map(|(from, to, w)| EdgeRecord { from, to, w }).collect(),
            agents: (0..n).map(|i| AgentRecord { id: i + 1, beta: beta[i], x0: x0[i] }).collect(),
        };
        let (g, p) = file.into_model().map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::checked(g, p)
    }

    /// Parses the JSON graph format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (g, p) = parse_graph(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::checked(g, p)
    }

    fn to_json(&self) -> String {
        to_canonical_string(&graph_to_json(&self.graph, &self.profile))
    }

    #[getter]
    fn n(&self) -> usize {
        self.graph.node_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.graph.edges().iter().map(|e| (e.from + 1, e.to + 1, e.weight)).collect()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.profile.beta().to_vec()
    }

    #[getter]
    fn x0(&self) -> Vec<f64> {
        self.profile.x0().to_vec()
    }

    /// The same network with new initial opinions.
    fn with_x0(&self, x0: Vec<f64>) -> PyResult<Self> {
        let profile = self.profile.with_x0(x0).map_err(err)?;
        Ok(Self { graph: self.graph.clone(), profile })
    }

    fn stubborn(&self) -> Vec<usize> {
        one_based(&self.profile.stubborn())
    }

    fn influential(&self) -> PyResult<Vec<usize>> {
        let classes = classify_agents(&self.graph, &self.profile).map_err(err)?;
        Ok(classes.influential().into_iter().map(|i| i + 1).collect())
    }

    /// Oblivious iSCCs that are periodic. Empty when the dynamics converge.
    fn periodic_isccs(&self) -> PyResult<Vec<Vec<usize>>> {
        let classes = classify_agents(&self.graph, &self.profile).map_err(err)?;
        Ok(match convergence_of(&self.graph, &classes).map_err(err)? {
            Convergence::Converges => Vec::new(),
            Convergence::PeriodicIscc(c) => one_based_blocks(&c),
        })
    }

    #[pyo3(signature = (method="closed-form", tol=SIMULATION_TOL, max_iter=SIMULATION_MAX_ITER))]
    fn steady_state(&self, method: &str, tol: f64, max_iter: usize) -> PyResult<SteadyState> {
        let s = match method {
            "closed-form" => steady_state(&self.graph, &self.profile),
            "simulate" => steady_state_simulated(&self.graph, &self.profile, tol, max_iter),
            m => return Err(PyValueError::new_err(format!("unknown method {m:?}"))),
        }
        .map_err(err)?;
        Ok(SteadyState {
            x_star: s.x_star().to_vec(),
            method: s.method().as_str(),
            residual: s.residual(),
            oblivious: one_based(s.oblivious()),
        })
    }

    #[pyo3(signature = (tol=SIMULATION_TOL, max_iter=SIMULATION_MAX_ITER))]
    fn simulate(&self, tol: f64, max_iter: usize) -> PyResult<Trajectory> {
        let t = run_simulation(&self.graph, &self.profile, tol, max_iter).map_err(err)?;
        Ok(Trajectory { steps: t.steps().to_vec(), states: t.states().to_vec(), converged: t.converged() })
    }

    fn ltp(&self) -> PyResult<PersuasionReport> {
        let classes = classify_agents(&self.graph, &self.profile).map_err(err)?;
        let r = analyze(&self.graph, &classes).map_err(err)?;
        Ok(PersuasionReport {
            ltp: r.ltp().iter().map(|(&p, np)| (p + 1, one_based(np))).collect(),
            residual: one_based(r.residual()),
            dot: r.to_dot(),
        })
    }

    /// Predicted opinion clusters; singleton blocks make no claim.
    fn predict(&self) -> PyResult<Vec<Vec<usize>>> {
        let classes = classify_agents(&self.graph, &self.profile).map_err(err)?;
        let r = analyze(&self.graph, &classes).map_err(err)?;
        Ok(one_based_blocks(predicted_from(&classes, &r).map_err(err)?.blocks()))
    }

    /// Checks the predicted clusters at the given weights, then on `trials`
    /// random re-weightings.
    #[pyo3(signature = (trials=100, seed=0, tol=GROUPING_TOL, certify=false))]
    fn verify(&self, trials: usize, seed: u64, tol: f64, certify: bool) -> PyResult<TrialReport> {
        let (g, p) = (&self.graph, &self.profile);
        let classes = classify_agents(g, p).map_err(err)?;
        let r = analyze(g, &classes).map_err(err)?;
        let predicted = predicted_from(&classes, &r).map_err(err)?;
        let x = steady_state(g, p).map_err(err)?;
        let observed = empirical(x.x_star(), tol).map_err(err)?;
        let refines = verify_refinement(&predicted, &observed).map_err(err)?.refines();
        let opts = TrialOptions { grouping_tol: tol, certify };
        let t = robustness_trials(g, &p.stubborn(), trials, seed, &opts).map_err(err)?;
        Ok(TrialReport {
            refines,
            passed: t.passed,
            total: t.total,
            failure: t.counterexample.map(|c| (c.trial, c.reason)),
        })
    }

    /// Kron certificate for a persuaded pair: `(coeff_p, coeff_q, certified)`.
    fn certify(&self, p: usize, q: usize) -> PyResult<(f64, f64, bool)> {
        let n = self.graph.node_count();
        let pq = zero_based(&[p, q], n, "certify")?;
        let classes = classify_agents(&self.graph, &self.profile).map_err(err)?;
        let (_, rel) = certify_pair(&self.graph, &self.profile, &classes, pq[0], pq[1]).map_err(err)?;
        Ok((rel.coeff_p, rel.coeff_q, rel.certified))
    }

    /// Kron reduction of the stubborn-augmented matrix onto `alpha`. Node
    /// `n + k` is the source of the k-th stubborn agent.
    fn kron(&self, alpha: Vec<usize>) -> PyResult<KronReduction> {
        let r = build_r(&self.graph, &self.profile).map_err(err)?;
        let alpha0 = zero_based(&alpha, r.matrix().nrows(), "alpha")?;
        if !r.valid_alpha(&alpha0) {
            return Err(PyValueError::new_err("alpha leaves eliminated nodes unreachable"));
        }
        let k = r.reduce(&alpha0).map_err(err)?;
        Ok(KronReduction {
            alpha: one_based(k.alpha()),
            omega: one_based(k.omega()),
            reduced: k.reduced().row_iter().map(|row| row.iter().copied().collect()).collect(),
            laplacian: is_laplacian(k.reduced(), LAPLACIAN_TOL),
        })
    }

    fn __repr__(&self) -> String {
        format!("Network(n={}, edges={})", self.graph.node_count(), self.graph.edges().len())
    }
}

#[pyclass(module = "fjcluster_py", frozen, get_all)]
struct SteadyState {
    x_star: Vec<f64>,
    method: &'static str,
    residual: f64,
    oblivious: Vec<usize>,
}

#[pyclass(module = "fjcluster_py", frozen, get_all)]
struct Trajectory {
    steps: Vec<usize>,
    states: Vec<Vec<f64>>,
    converged: bool,
}

#[pyclass(module = "fjcluster_py", frozen, get_all)]
struct PersuasionReport {
    ltp: BTreeMap<usize, Vec<usize>>,
    residual: Vec<usize>,
    dot: String,
}

#[pyclass(module = "fjcluster_py", frozen, get_all)]
struct KronReduction {
    alpha: Vec<usize>,
    omega: Vec<usize>,
    reduced: Vec<Vec<f64>>,
    laplacian: bool,
}

#[pyclass(module = "fjcluster_py", frozen, get_all)]
struct TrialReport {
    refines: bool,
    passed: usize,
    total: usize,
    /// `(trial, reason)` of the first failing trial.
    failure: Option<(usize, String)>,
}

#[pymethods]
impl TrialReport {
    fn all_passed(&self) -> bool {
        self.refines && self.passed == self.total
    }
}

/// Groups opinions whose sorted gaps stay within `tol`.
#[pyfunction]
#[pyo3(signature = (x, tol=GROUPING_TOL))]
fn empirical_clusters(x: Vec<f64>, tol: f64) -> PyResult<Vec<Vec<usize>>> {
    Ok(one_based_blocks(empirical(&x, tol).map_err(err)?.blocks()))
}

/// Builds a network whose predicted clusters are `blocks`, led by the
/// designated agents in `ltp` (`None` for a leaderless block).
#[pyfunction]
#[pyo3(signature = (blocks, ltp, stubborn, edges=Vec::new(), seed=0, density=fjcluster::design::DEFAULT_DENSITY))]
fn design(
    blocks: Vec<Vec<usize>>,
    ltp: Vec<Option<usize>>,
    stubborn: Vec<usize>,
    edges: Vec<(usize, usize)>,
    seed: u64,
    density: f64,
) -> PyResult<Network> {
    let n = blocks.iter().map(Vec::len).sum();
    let blocks = blocks.iter().map(|b| zero_based(b, n, "blocks")).collect::<PyResult<Vec<_>>>()?;
    let ltp = ltp
        .into_iter()
        .map(|d| d.map(|d| zero_based(&[d], n, "ltp").map(|v| v[0])).transpose())
        .collect::<PyResult<Vec<_>>>()?;
    let stubborn = zero_based(&stubborn, n, "stubborn")?;
    let edges = edges
        .into_iter()
        .map(|(u, v)| zero_based(&[u, v], n, "edges").map(|e| (e[0], e[1])))
        .collect::<PyResult<Vec<_>>>()?;
    let spec = DesignSpec::new(blocks, ltp, stubborn, edges, seed, density).map_err(err)?;
    let g = synthesize(&spec).map_err(err)?;
    let verdict = validate_design(&g, &spec).map_err(err)?;
    if let Some(d) = verdict.discrepancy {
        return Err(VerdictError::new_err(d));
    }
    Ok(Network { graph: g, profile: spec.profile() })
}

#[pymodule]
fn fjcluster_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<SteadyState>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<PersuasionReport>()?;
    m.add_class::<KronReduction>()?;
    m.add_class::<TrialReport>()?;
    m.add_function(wrap_pyfunction!(empirical_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add("VerdictError", m.py().get_type::<VerdictError>())?;
    Ok(())
}
