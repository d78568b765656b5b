//! Opinion-cluster analysis for Friedkin-Johnsen dynamics on weighted
//! digraphs: steady states, LTP agents via dominators, Kron reduction,
//! cluster prediction and network synthesis.
//!
//! Agents are indexed from 0. An edge `(i, j, w)` means agent `j` gives
//! weight `w` to the opinion of agent `i`, so `W[j][i] = w`.

pub mod classify;
pub mod cli;
pub mod clusters;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod kron;
pub mod linalg;
pub mod ltp;
pub mod random;

pub use classify::{classify_agents, influencers_of, AgentClasses, AgentProfile};
pub use clusters::{ClusterSet, TrialOptions, TrialReport};
pub use design::DesignSpec;
pub use dynamics::{SteadyState, Trajectory};
pub use error::{Error, Result};
pub use graph::{Digraph, Edge, SccDecomposition};
pub use kron::{KronResult, RMatrix};
pub use ltp::PersuasionReport;
