//! Signed selection graphs: the underlying arc set, its split into
//! attractive and repulsive arcs, and the derived selection/Laplacian
//! matrices.
//!
//! An arc `(j, i)` means "node `i` picks node `j`": when it fires, node `i`
//! moves and node `j` keeps its value. The weight is the selection
//! probability `p_ij`, so arc `(j, i)` contributes to row `i` of `P`.
//! Public constructors take 1-based node labels; everything stored here is
//! 0-based.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Attractive,
    Repulsive,
}

/// A weighted arc with 0-based endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    source: usize,
    kind: ArcKind,
    cumulative: f64,
}

#[derive(Debug, Clone)]
pub struct SignedGraph {
    n: usize,
    att: Vec<Arc>,
    rep: Vec<Arc>,
    p: DMatrix<f64>,
    p_att: DMatrix<f64>,
    p_rep: DMatrix<f64>,
    l_att: DMatrix<f64>,
    l_rep: DMatrix<f64>,
    // per updating node, the candidate neighbours in stored arc order
    rows: Vec<Vec<Choice>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConnectivityReport {
    pub att_has_rooted_spanning_tree: bool,
    pub att_strongly_connected: bool,
    pub rep_weakly_connected: bool,
    pub rep_nonempty: bool,
    pub bidirectional: bool,
}

/// Builds a signed graph from 1-based `(source, target, weight)` triples.
pub fn build_partition(
    n: usize,
    att_arcs: &[(usize, usize, f64)],
    rep_arcs: &[(usize, usize, f64)],
) -> Result<SignedGraph> {
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    let att = convert_arcs(n, att_arcs)?;
    let rep = convert_arcs(n, rep_arcs)?;
    SignedGraph::from_arcs(n, att, rep)
}

fn convert_arcs(n: usize, arcs: &[(usize, usize, f64)]) -> Result<Vec<Arc>> {
    arcs.iter()
        .map(|&(j, i, w)| {
            if j == 0 || i == 0 || j > n || i > n {
                return Err(Error::NodeOutOfRange {
                    source_node: j,
                    target: i,
                    n,
                });
            }
            if j == i {
                return Err(Error::SelfLoop(i));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight {
                    source_node: j,
                    target: i,
                    weight: w,
                });
            }
            Ok(Arc {
                source: j - 1,
                target: i - 1,
                weight: w,
            })
        })
        .collect()
}

impl SignedGraph {
    /// Builds from 0-based arcs. Endpoints and weights must already be valid.
    fn from_arcs(n: usize, att: Vec<Arc>, rep: Vec<Arc>) -> Result<Self> {
        let mut p_att = DMatrix::zeros(n, n);
        let mut p_rep = DMatrix::zeros(n, n);
        let mut seen = vec![None::<ArcKind>; n * n];

        for (arcs, kind, matrix) in [
            (&att, ArcKind::Attractive, &mut p_att),
            (&rep, ArcKind::Repulsive, &mut p_rep),
        ] {
            for a in arcs {
                let slot = &mut seen[a.target * n + a.source];
                match *slot {
                    Some(prev) if prev == kind => {
                        return Err(Error::DuplicateArc {
                            source_node: a.source + 1,
                            target: a.target + 1,
                        })
                    }
                    Some(_) => {
                        return Err(Error::Overlap {
                            source_node: a.source + 1,
                            target: a.target + 1,
                        })
                    }
                    None => *slot = Some(kind),
                }
                matrix[(a.target, a.source)] = a.weight;
            }
        }

        let p = &p_att + &p_rep;
        for (row, r) in p.row_iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > tolerances::STOCHASTIC {
                return Err(Error::Stochasticity { row: row + 1, sum });
            }
        }

        let l_att = laplacian(&p_att);
        let l_rep = laplacian(&p_rep);

        let mut rows: Vec<Vec<Choice>> = vec![Vec::new(); n];
        for (arcs, kind) in [(&att, ArcKind::Attractive), (&rep, ArcKind::Repulsive)] {
            for a in arcs {
                let row = &mut rows[a.target];
                let cumulative = row.last().map_or(0.0, |c| c.cumulative) + a.weight;
                row.push(Choice {
                    source: a.source,
                    kind,
                    cumulative,
                });
            }
        }

        Ok(Self {
            n,
            att,
            rep,
            p,
            p_att,
            p_rep,
            l_att,
            l_rep,
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn att_arcs(&self) -> &[Arc] {
        &self.att
    }

    pub fn rep_arcs(&self) -> &[Arc] {
        &self.rep
    }

    /// Row-stochastic selection matrix `P = P_att + P_rep`.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn p_att(&self) -> &DMatrix<f64> {
        &self.p_att
    }

    pub fn p_rep(&self) -> &DMatrix<f64> {
        &self.p_rep
    }

    /// Row sums of `P_att`.
    pub fn d_att(&self) -> DVector<f64> {
        row_sums(&self.p_att)
    }

    /// Row sums of `P_rep`.
    pub fn d_rep(&self) -> DVector<f64> {
        row_sums(&self.p_rep)
    }

    pub fn l_att(&self) -> &DMatrix<f64> {
        &self.l_att
    }

    pub fn l_rep(&self) -> &DMatrix<f64> {
        &self.l_rep
    }

    /// Laplacian of the unpartitioned selection matrix, `D - P`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        laplacian(&self.p)
    }

    /// `E₀`, the number of attractive arcs.
    pub fn att_arc_count(&self) -> usize {
        self.att.len()
    }

    /// Smallest positive selection probability (`p∗`).
    pub fn min_weight(&self) -> f64 {
        self.att
            .iter()
            .chain(&self.rep)
            .map(|a| a.weight)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest selection probability (`p*`).
    pub fn max_weight(&self) -> f64 {
        self.att
            .iter()
            .chain(&self.rep)
            .map(|a| a.weight)
            .fold(0.0, f64::max)
    }

    pub fn is_bidirectional(&self) -> bool {
        is_symmetric(&self.p_att) && is_symmetric(&self.p_rep)
    }

    pub fn kind_of(&self, source: usize, target: usize) -> Option<ArcKind> {
        if self.p_att[(target, source)] > 0.0 {
            Some(ArcKind::Attractive)
        } else if self.p_rep[(target, source)] > 0.0 {
            Some(ArcKind::Repulsive)
        } else {
            None
        }
    }

    /// True when `P` is `(𝟏𝟏ᵀ − I)/(n − 1)` within the stochasticity tolerance.
    pub fn is_complete_uniform(&self) -> bool {
        let w = 1.0 / (self.n - 1) as f64;
        self.p.iter().enumerate().all(|(idx, &v)| {
            let (i, j) = (idx % self.n, idx / self.n);
            let expected = if i == j { 0.0 } else { w };
            (v - expected).abs() <= tolerances::STOCHASTIC
        })
    }

    /// Inverse-CDF lookup of the neighbour of `node` for a uniform `u ∈ [0,1)`.
    pub(crate) fn pick_neighbour(&self, node: usize, u: f64) -> (usize, ArcKind) {
        let row = &self.rows[node];
        let total = row.last().map_or(1.0, |c| c.cumulative);
        let target = u * total;
        let idx = row
            .partition_point(|c| c.cumulative <= target)
            .min(row.len() - 1);
        (row[idx].source, row[idx].kind)
    }

    pub fn connectivity(&self) -> ConnectivityReport {
        let att: Vec<(usize, usize)> = self.att.iter().map(|a| (a.source, a.target)).collect();
        let rep: Vec<(usize, usize)> = self.rep.iter().map(|a| (a.source, a.target)).collect();
        let forward = adjacency(self.n, att.iter().copied());
        let backward = adjacency(self.n, att.iter().map(|&(s, t)| (t, s)));

        let att_strongly_connected =
            reach_count(&forward, 0) == self.n && reach_count(&backward, 0) == self.n;
        let att_has_rooted_spanning_tree =
            att_strongly_connected || (0..self.n).any(|r| reach_count(&forward, r) == self.n);

        let undirected = adjacency(self.n, rep.iter().flat_map(|&(s, t)| [(s, t), (t, s)]));
        ConnectivityReport {
            att_has_rooted_spanning_tree,
            att_strongly_connected,
            rep_weakly_connected: !rep.is_empty() && reach_count(&undirected, 0) == self.n,
            rep_nonempty: !rep.is_empty(),
            bidirectional: self.is_bidirectional(),
        }
    }

    pub fn to_file(&self) -> GraphFile {
        let label = |arcs: &[Arc]| {
            arcs.iter()
                .map(|a| (a.source + 1, a.target + 1, a.weight))
                .collect()
        };
        GraphFile {
            n: self.n,
            att: label(&self.att),
            rep: label(&self.rep),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph file serializes")
    }
}

/// On-disk graph format: `{n, att: [[j,i,w],...], rep: [[j,i,w],...]}`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default)]
    pub att: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub rep: Vec<(usize, usize, f64)>,
}

impl GraphFile {
    pub fn build(&self) -> Result<SignedGraph> {
        build_partition(self.n, &self.att, &self.rep)
    }
}

pub(crate) fn laplacian(p: &DMatrix<f64>) -> DMatrix<f64> {
    let d = row_sums(p);
    DMatrix::from_diagonal(&d) - p
}

fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.iter().sum::<f64>()))
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tolerances::STOCHASTIC))
}

fn adjacency(n: usize, arcs: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (s, t) in arcs {
        adj[s].push(t);
    }
    adj
}

fn reach_count(adj: &[Vec<usize>], root: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![root];
    seen[root] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count
}

fn check_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        if a == b || a == 0 || b == 0 || a > n || b > n {
            return Err(Error::InvalidPair(a, b));
        }
        let key = (a.min(b) - 1, a.max(b) - 1);
        if out.contains(&key) {
            return Err(Error::InvalidPair(a, b));
        }
        out.push(key);
    }
    Ok(out)
}

/// Splits the arcs of `edges` (0-based unordered pairs with one shared weight)
/// into attractive and repulsive sets, both directions per pair.
fn split_undirected(
    n: usize,
    edges: impl Iterator<Item = (usize, usize)>,
    weight: f64,
    repulsive: impl Fn(usize, usize) -> bool,
) -> Result<SignedGraph> {
    let mut att = Vec::new();
    let mut rep = Vec::new();
    for (a, b) in edges {
        let set = if repulsive(a, b) { &mut rep } else { &mut att };
        set.push(Arc {
            source: a,
            target: b,
            weight,
        });
        set.push(Arc {
            source: b,
            target: a,
            weight,
        });
    }
    SignedGraph::from_arcs(n, att, rep)
}

fn complete_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
}

/// Complete graph with `p_ij = 1/(n−1)`; every listed pair (1-based) is repulsive
/// in both directions.
pub fn complete_uniform(n: usize, rep_pairs: &[(usize, usize)]) -> Result<SignedGraph> {
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    let pairs = check_pairs(n, rep_pairs)?;
    let w = 1.0 / (n - 1) as f64;
    split_undirected(n, complete_pairs(n), w, |a, b| pairs.contains(&(a, b)))
}

/// Ring with `P = A/2`; listed pairs must be ring edges.
pub fn ring_uniform(n: usize, rep_pairs: &[(usize, usize)]) -> Result<SignedGraph> {
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    let pairs = check_pairs(n, rep_pairs)?;
    let is_ring_edge = |(a, b): (usize, usize)| b == a + 1 || (a == 0 && b == n - 1);
    if let Some(&(a, b)) = pairs.iter().find(|&&e| !is_ring_edge(e)) {
        return Err(Error::NotRingEdge(a + 1, b + 1));
    }
    let edges = (0..n).map(|a| {
        let b = (a + 1) % n;
        (a.min(b), a.max(b))
    });
    split_undirected(n, edges, 0.5, |a, b| pairs.contains(&(a, b)))
}

/// Complete uniform graph whose repulsive part is an Erdős–Rényi `G(n, p)` sample.
pub fn er_repulsive(n: usize, p: f64, seed: u64) -> Result<SignedGraph> {
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0,1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = vec![false; n * n];
    for (a, b) in complete_pairs(n) {
        rep[a * n + b] = rng.random::<f64>() < p;
    }
    let w = 1.0 / (n - 1) as f64;
    split_undirected(n, complete_pairs(n), w, |a, b| rep[a * n + b])
}

/// Random symmetric, zero-diagonal, doubly stochastic selection matrix built as a
/// convex mixture of `(Π_σ + Π_σᵀ)/2` over random derangements `σ`, with each
/// undirected edge made repulsive with probability `rep_probability`.
pub fn random_symmetric<R: Rng + ?Sized>(
    n: usize,
    mixtures: usize,
    rep_probability: f64,
    rng: &mut R,
) -> Result<SignedGraph> {
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    if mixtures == 0 {
        return Err(Error::InvalidArgument(
            "need at least one mixture component".into(),
        ));
    }
    let raw: Vec<f64> = (0..mixtures).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = raw.iter().sum();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for c in raw.iter().map(|r| r / total) {
        let sigma = random_derangement(n, rng);
        for (i, &j) in sigma.iter().enumerate() {
            p[(i, j)] += c / 2.0;
            p[(j, i)] += c / 2.0;
        }
    }
    let mut att = Vec::new();
    let mut rep = Vec::new();
    for (a, b) in complete_pairs(n) {
        let w = p[(a, b)];
        if w <= 0.0 {
            continue;
        }
        let set = if rng.random::<f64>() < rep_probability {
            &mut rep
        } else {
            &mut att
        };
        set.push(Arc {
            source: a,
            target: b,
            weight: w,
        });
        set.push(Arc {
            source: b,
            target: a,
            weight: w,
        });
    }
    SignedGraph::from_arcs(n, att, rep)
}

fn random_derangement<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    loop {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            return perm;
        }
    }
}
