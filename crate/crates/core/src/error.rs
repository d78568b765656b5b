use thiserror::Error;

/// Errors raised by graph construction and the analysis routines.
///
/// Node indices carried by variants are zero-based; the JSON/CLI layer adds
/// one when reporting them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph must contain at least one node")]
    EmptyGraph,
    #[error("edge {from}->{to}: node index out of range for n={n}")]
    NodeOutOfRange { from: usize, to: usize, n: usize },
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("edge {from}->{to}: weight {weight} must be finite and positive")]
    InvalidWeight { from: usize, to: usize, weight: f64 },
    #[error("node {0} is isolated and has no self-loop")]
    IsolatedNode(usize),
    #[error("row {row} of W sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },
    #[error("agent profile: {0}")]
    InvalidProfile(String),
    #[error("graph is not weakly connected")]
    NotWeaklyConnected,
    #[error("component {0} has no cycle; its period is undefined")]
    UndefinedPeriod(usize),
    #[error("no influential agents")]
    NoInfluentialAgents,
    #[error("node {0} is unreachable from the flow-graph root")]
    Unreachable(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("persuasion oracle limited to {limit} nodes, graph has {n}")]
    OracleSizeLimit { n: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("spectral radius {0} is not below 1")]
    SpectralRadius(f64),
    #[error("periodic iSCC of oblivious agents: {0:?}")]
    PeriodicIscc(Vec<Vec<usize>>),
    #[error("R matrix needs at least one stubborn agent")]
    NoStubbornAgents,
    #[error("steady-state residual {0} exceeds tolerance")]
    Residual(f64),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),
}

pub type Result<T> = std::result::Result<T, Error>;
