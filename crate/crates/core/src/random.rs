//! Seeded sampling of weights, stubbornness and initial opinions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Digraph, Edge};

/// Initial opinions are drawn from `[0, OPINION_RANGE]`.
pub const OPINION_RANGE: f64 = 10.0;

/// Generator for trial `index` of a run seeded with `seed`; independent of
/// the order in which trials execute.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw from `(0, 1]`.
pub fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Uniform draw from `(0, 1)`.
pub fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            return u;
        }
    }
}

/// Same edge set, fresh weights: each node's in-edges get i.i.d. `(0, 1]`
/// draws that are then normalized to sum to one.
pub fn redraw_weights<R: Rng + ?Sized>(g: &Digraph, rng: &mut R) -> Result<Digraph> {
    let n = g.node_count();
    let mut edges = Vec::with_capacity(g.edges().len());
    for v in 0..n {
        let draws: Vec<f64> = g.in_neighbors(v).iter().map(|_| unit_open_closed(rng)).collect();
        let total: f64 = draws.iter().sum();
        for (&(u, _), d) in g.in_neighbors(v).iter().zip(draws) {
            edges.push(Edge::new(u, v, d / total));
        }
    }
    Digraph::build(n, edges)
}

/// `beta` that is positive in `(0, 1)` exactly on `stubborn`.
pub fn random_beta<R: Rng + ?Sized>(n: usize, stubborn: &[usize], rng: &mut R) -> Vec<f64> {
    let mut beta = vec![0.0; n];
    for &s in stubborn {
        beta[s] = unit_open(rng);
    }
    beta
}

pub fn random_opinions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..=OPINION_RANGE)).collect()
}
