use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("arc ({source_node},{target}) references a node outside 1..={n}")]
    NodeOutOfRange {
        source_node: usize,
        target: usize,
        n: usize,
    },

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("arc ({source_node},{target}) has non-positive or non-finite weight {weight}")]
    InvalidWeight {
        source_node: usize,
        target: usize,
        weight: f64,
    },

    #[error("arc ({source_node},{target}) listed more than once in the same set")]
    DuplicateArc { source_node: usize, target: usize },

    #[error("arc ({source_node},{target}) is both attractive and repulsive")]
    Overlap { source_node: usize, target: usize },

    #[error("row {row} of P sums to {sum}, expected 1")]
    Stochasticity { row: usize, sum: f64 },

    #[error("invalid node pair {{{0},{1}}}")]
    InvalidPair(usize, usize),

    #[error("pair {{{0},{1}}} is not an edge of the ring")]
    NotRingEdge(usize, usize),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("gain out of range: {0}")]
    GainRange(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("repulsive graph is empty, no threshold exists")]
    EmptyRepulsive,

    #[error("selection matrix is not the uniform complete graph")]
    NotCompleteUniform,

    #[error("state magnitude exceeded the overflow guard at node {node}")]
    Overflow { node: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed graph file: {0}")]
    Parse(String),
}
