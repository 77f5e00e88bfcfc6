//! Fixed instances shared by the benchmarks.

use signed_gossip::{complete_uniform, er_repulsive, ring_uniform, SignedGraph, StateVector};

/// Complete graph on `n` nodes with a single repulsive pair.
pub fn complete(n: usize) -> SignedGraph {
    complete_uniform(n, &[(1, 2)]).expect("valid complete graph")
}

pub fn ring(n: usize) -> SignedGraph {
    ring_uniform(n, &[(1, 2)]).expect("valid ring")
}

pub fn erdos_renyi(n: usize, p: f64) -> SignedGraph {
    er_repulsive(n, p, 1).expect("valid ER partition")
}

/// `1, 2, …, n`.
pub fn ramp(n: usize) -> StateVector {
    StateVector::new((1..=n).map(|v| v as f64).collect()).expect("finite state")
}
