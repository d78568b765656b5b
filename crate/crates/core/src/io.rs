//! JSON file formats. Agents are numbered from 1 in files and from 0 in
//! memory.
//!
//! Graph files look like
//!
//! ```json
//! {"n": 3,
//!  "edges": [{"from": 1, "to": 2, "w": 1.0}, ...],
//!  "agents": [{"id": 1, "beta": 0.5, "x0": 4.0}, ...]}
//! ```
//!
//! Agents missing from `agents` get `beta = 0` and `x0 = 0`. Design specs
//! look like `{"blocks": [[1, 2], [3]], "ltp": [1, null], "stubborn": [1],
//! "seed": 0, "density": 0.3}` with an optional `"edges": [[from, to], ...]`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classify::AgentProfile;
use crate::design::{DesignSpec, DEFAULT_DENSITY};
use crate::graph::{Digraph, Edge};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InputError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> InputError {
    InputError::Schema { field: field.into(), message: message.into() }
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            InputError::Json { line: e.line(), column: e.column(), message: e.to_string() }
        } else {
            schema(format!("line {}", e.line()), e.to_string())
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    pub id: usize,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub agents: Vec<AgentRecord>,
}

fn one_based(field: &str, v: usize, n: usize) -> Result<usize, InputError> {
    if v == 0 || v > n {
        return Err(schema(field, format!("agent {v} is outside 1..={n}")));
    }
    Ok(v - 1)
}

impl GraphFile {
    pub fn into_model(self) -> Result<(Digraph, AgentProfile), InputError> {
        let n = self.n;
        if n == 0 {
            return Err(schema("n", "must be at least 1"));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let from = one_based(&format!("edges[{k}].from"), e.from, n)?;
            let to = one_based(&format!("edges[{k}].to"), e.to, n)?;
            edges.push(Edge::new(from, to, e.w));
        }
        let mut beta = vec![0.0; n];
        let mut x0 = vec![0.0; n];
        let mut seen = vec![false; n];
        for (k, a) in self.agents.iter().enumerate() {
            let i = one_based(&format!("agents[{k}].id"), a.id, n)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(schema(format!("agents[{k}].id"), format!("agent {} listed twice", a.id)));
            }
            beta[i] = a.beta;
            x0[i] = a.x0;
        }
        let g = Digraph::build(n, edges)?;
        let p = AgentProfile::new(beta, x0)?;
        Ok((g, p))
    }
}

pub fn parse_graph(text: &str) -> Result<(Digraph, AgentProfile), InputError> {
    parse::<GraphFile>(text)?.into_model()
}

pub fn graph_to_json(g: &Digraph, p: &AgentProfile) -> Value {
    let mut edges: Vec<&Edge> = g.edges().iter().collect();
    edges.sort_by_key(|e| (e.from, e.to));
    json!({
        "n": g.node_count(),
        "edges": edges.iter().map(|e| json!({"from": e.from + 1, "to": e.to + 1, "w": e.weight})).collect::<Vec<_>>(),
        "agents": (0..p.len())
            .map(|i| json!({"id": i + 1, "beta": p.beta()[i], "x0": p.x0()[i]}))
            .collect::<Vec<_>>(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub blocks: Vec<Vec<usize>>,
    pub ltp: Vec<Option<usize>>,
    #[serde(default)]
    pub stubborn: Vec<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl DesignFile {
    /// `default_seed` applies when the file has no `seed`.
    pub fn into_spec(self, default_seed: u64) -> Result<DesignSpec, InputError> {
        let n: usize = self.blocks.iter().map(Vec::len).sum();
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, block)| {
                block
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| one_based(&format!("blocks[{b}][{k}]"), v, n))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ltp = self
            .ltp
            .iter()
            .enumerate()
            .map(|(b, d)| d.map(|v| one_based(&format!("ltp[{b}]"), v, n)).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        let stubborn = self
            .stubborn
            .iter()
            .enumerate()
            .map(|(k, &v)| one_based(&format!("stubborn[{k}]"), v, n))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, &[u, v])| {
                Ok((one_based(&format!("edges[{k}][0]"), u, n)?, one_based(&format!("edges[{k}][1]"), v, n)?))
            })
            .collect::<Result<Vec<_>, InputError>>()?;
        Ok(DesignSpec::new(
            blocks,
            ltp,
            stubborn,
            edges,
            self.seed.unwrap_or(default_seed),
            self.density.unwrap_or(DEFAULT_DENSITY),
        )?)
    }
}

pub fn parse_design(text: &str, default_seed: u64) -> Result<DesignSpec, InputError> {
    parse::<DesignFile>(text)?.into_spec(default_seed)
}

/// Agent index lists shifted to 1-based numbering.
pub fn one_based_blocks(blocks: &[Vec<usize>]) -> Value {
    json!(blocks.iter().map(|b| b.iter().map(|v| v + 1).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Pretty JSON with sorted keys and shortest round-trip floats.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
