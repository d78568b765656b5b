//! Small reference networks used throughout the tests, the CLI examples and
//! the Python smoke test. Node labels in comments are one-based.

use crate::classify::AgentProfile;
use crate::graph::{Digraph, Edge};

fn build(n: usize, edges: &[(usize, usize, f64)]) -> Digraph {
    Digraph::build(n, edges.iter().map(|&(i, j, w)| Edge::new(i - 1, j - 1, w)))
        .expect("fixture edges are valid")
}

const A_EDGES: [(usize, usize, f64); 7] = [
    (2, 2, 1.0),
    (2, 3, 0.5),
    (6, 3, 0.5),
    (3, 4, 1.0),
    (4, 5, 1.0),
    (5, 6, 1.0),
    (6, 1, 1.0),
];

const A_BETA: [f64; 6] = [0.0, 0.3, 0.0, 0.0, 0.0, 0.6];
const A_X0: [f64; 6] = [2.0, 6.5, 1.0, 4.0, 9.0, 8.0];

/// Six agents, stubborn agents 2 (beta 0.3) and 6 (beta 0.6).
pub fn fixture_a() -> (Digraph, AgentProfile) {
    let g = build(6, &A_EDGES);
    let p = AgentProfile::new(A_BETA.to_vec(), A_X0.to_vec()).unwrap();
    (g, p)
}

/// Fixture A with edge 1 -> 5 (weight 0.5) added and 4 -> 5 lowered to 0.5.
pub fn fixture_a_prime() -> (Digraph, AgentProfile) {
    let mut edges = A_EDGES.to_vec();
    for e in edges.iter_mut() {
        if (e.0, e.1) == (4, 5) {
            e.2 = 0.5;
        }
    }
    edges.push((1, 5, 0.5));
    let g = build(6, &edges);
    let p = AgentProfile::new(A_BETA.to_vec(), A_X0.to_vec()).unwrap();
    (g, p)
}

/// Five oblivious agents: iSCC {1, 2} (self-loop on 1) feeding the chain
/// 3 -> 4 -> 5.
pub fn fixture_b() -> (Digraph, AgentProfile) {
    let g = build(
        5,
        &[
            (1, 1, 0.5),
            (1, 2, 1.0),
            (2, 1, 0.5),
            (1, 3, 0.5),
            (2, 3, 0.5),
            (3, 4, 1.0),
            (4, 5, 1.0),
        ],
    );
    let p = AgentProfile::degroot(vec![3.0, 9.0, 1.0, 7.0, 5.0]).unwrap();
    (g, p)
}

/// Chain 1 -> 2 -> 3 with a self-loop on 1; agent 1 stubborn with beta 0.5.
pub fn three_chain() -> (Digraph, AgentProfile) {
    let g = build(3, &[(1, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
    let p = AgentProfile::new(vec![0.5, 0.0, 0.0], vec![4.0, 1.0, 9.0]).unwrap();
    (g, p)
}
