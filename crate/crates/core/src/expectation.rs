//! Convergence and divergence in expectation.
//!
//! The expected update is `W̄ = I − (α/n)L_att + (β/n)L_rep`, and the mean
//! disagreement evolves as `E y(k+1) = ΠW̄ E y(k)` with `Π = I − 𝟏𝟏ᵀ/n`.
//! Everything here is a function of `f(α,β) = ρ(ΠW̄)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, er_repulsive, SignedGraph};
use crate::schedule::{check_gains, Schedule};
use crate::seeds::derive_seed;
use crate::spectral::{self, commutator_norm, spectral_radius_with, weyl_bound_with};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Converges,
    Diverges,
    Critical,
}

impl Classification {
    pub fn from_rate(f: f64, band: f64) -> Self {
        if f < 1.0 - band {
            Classification::Converges
        } else if f > 1.0 + band {
            Classification::Diverges
        } else {
            Classification::Critical
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationReport {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip)]
    pub w_bar: DMatrix<f64>,
    #[serde(rename = "f")]
    pub f_value: f64,
    pub classification: Classification,
    pub weyl_bound: Option<f64>,
    #[serde(rename = "beta_star")]
    pub threshold_beta: Option<f64>,
}

/// `W̄ = I − (α/n)L_att + (β/n)L_rep`.
pub fn mean_update(g: &SignedGraph, alpha: f64, beta: f64) -> Result<DMatrix<f64>> {
    check_gains(alpha, beta)?;
    let n = g.n();
    let nf = n as f64;
    Ok(DMatrix::identity(n, n) - g.l_att() * (alpha / nf) + g.l_rep() * (beta / nf))
}

/// `Π·M`: subtracts each column's mean.
pub fn project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// `Π = I − 𝟏𝟏ᵀ/n`.
pub fn consensus_projector(n: usize) -> DMatrix<f64> {
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}

pub fn f_rho(g: &SignedGraph, alpha: f64, beta: f64) -> Result<f64> {
    f_rho_with(g, alpha, beta, &Tolerances::default())
}

pub fn f_rho_with(g: &SignedGraph, alpha: f64, beta: f64, tol: &Tolerances) -> Result<f64> {
    let w = mean_update(g, alpha, beta)?;
    spectral_radius_with(&project(&w), tol)
}

pub fn classify_expectation(g: &SignedGraph, alpha: f64, beta: f64) -> Result<ExpectationReport> {
    classify_expectation_with(g, alpha, beta, &Tolerances::default())
}

pub fn classify_expectation_with(
    g: &SignedGraph,
    alpha: f64,
    beta: f64,
    tol: &Tolerances,
) -> Result<ExpectationReport> {
    let w_bar = mean_update(g, alpha, beta)?;
    let f_value = spectral_radius_with(&project(&w_bar), tol)?;
    let weyl_bound = if g.is_bidirectional() {
        Some(weyl_bound_with(g, alpha, beta, tol)?)
    } else {
        None
    };
    Ok(ExpectationReport {
        n: g.n(),
        alpha,
        beta,
        w_bar,
        f_value,
        classification: Classification::from_rate(f_value, tol.critical_band),
        weyl_bound,
        threshold_beta: None,
    })
}

/// Checks the hypotheses under which `f(α, ·)` crosses 1 exactly once:
/// the attractive graph has a rooted spanning tree, the repulsive graph is
/// non-empty, and the Laplacians commute or both halves are symmetric.
pub fn check_threshold_hypotheses(g: &SignedGraph, tol: &Tolerances) -> Result<()> {
    let c = g.connectivity();
    if !c.rep_nonempty {
        return Err(Error::EmptyRepulsive);
    }
    if !c.att_has_rooted_spanning_tree {
        return Err(Error::Hypothesis(
            "attractive graph has no rooted spanning tree".into(),
        ));
    }
    if !c.bidirectional && commutator_norm(g.l_att(), g.l_rep())? > tol.commutation {
        return Err(Error::Hypothesis(
            "L_att and L_rep neither commute nor come from symmetric P_att, P_rep".into(),
        ));
    }
    Ok(())
}

/// Phase-transition repulsion gain `β⋆(α)` by bracket doubling from β = 1
/// followed by bisection down to width `tol`.
pub fn threshold_beta(g: &SignedGraph, alpha: f64, tol: f64) -> Result<f64> {
    threshold_beta_with(g, alpha, tol, &Tolerances::default())
}

pub fn threshold_beta_with(
    g: &SignedGraph,
    alpha: f64,
    width: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::GainRange(format!("alpha = {alpha} outside (0,1]")));
    }
    if width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bisection width {width} must be positive"
        )));
    }
    check_threshold_hypotheses(g, tol)?;

    let diverges = |beta: f64| f_rho_with(g, alpha, beta, tol).map(|f| f > 1.0);
    if diverges(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while !diverges(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NoConvergence {
                what: "threshold bracket",
                iterations: doublings,
            });
        }
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if diverges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form threshold for the uniform complete graph,
/// `max{(n/((n−1)λ_max(L_rep)) − 1)α, 0}`.
pub fn complete_graph_threshold(g: &SignedGraph, alpha: f64) -> Result<f64> {
    if !g.is_complete_uniform() || !g.is_bidirectional() {
        return Err(Error::NotCompleteUniform);
    }
    let c = g.connectivity();
    if !c.rep_nonempty {
        return Err(Error::EmptyRepulsive);
    }
    if !c.att_has_rooted_spanning_tree {
        return Err(Error::Hypothesis(
            "attractive graph has no rooted spanning tree".into(),
        ));
    }
    let n = g.n() as f64;
    let rep = spectral::sym_values(g.l_rep(), &Tolerances::default())?;
    let rep_max = rep[rep.len() - 1];
    Ok(((n / ((n - 1.0) * rep_max) - 1.0) * alpha).max(0.0))
}

/// Erdős–Rényi repulsion threshold `p⋆ = α/(α+β)`.
pub fn er_threshold(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::GainRange(format!("alpha = {alpha} outside (0,1]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::GainRange(format!("beta = {beta} outside (0,∞)")));
    }
    Ok(alpha / (alpha + beta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub fraction_converging: f64,
    pub samples: usize,
    pub seed: u64,
}

/// For every `p`, draws `samples` Erdős–Rényi repulsive partitions of the
/// uniform complete graph and reports the fraction with `ξ_n < 1`.
/// Sample `s` of grid point `i` is drawn with seed `derive_seed(seed, [i, s])`.
pub fn er_sweep(
    n: usize,
    p_grid: &[f64],
    alpha: f64,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    check_gains(alpha, beta)?;
    if let Some(p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0,1]"
        )));
    }
    let tol = Tolerances::default();
    let jobs: Vec<(usize, usize)> = (0..p_grid.len())
        .flat_map(|i| (0..samples).map(move |s| (i, s)))
        .collect();
    let converged: Vec<bool> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let g = er_repulsive(n, p_grid[i], derive_seed(seed, &[i as u64, s as u64]))?;
            Ok(f_rho_with(&g, alpha, beta, &tol)? < 1.0)
        })
        .collect::<Result<_>>()?;

    Ok(p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let hits = converged[i * samples..(i + 1) * samples]
                .iter()
                .filter(|&&c| c)
                .count();
            SweepPoint {
                p,
                fraction_converging: hits as f64 / samples as f64,
                samples,
                seed,
            }
        })
        .collect())
}

/// Finite-horizon look at the infinite-product sufficient conditions. Never a
/// proof: `not_a_proof` is always set.
#[derive(Debug, Clone, Serialize)]
pub struct ProductDiagnostic {
    /// Partial sums of `log λ_max(W̄_kᵀΠW̄_k)`.
    pub log_partial_sums: Vec<f64>,
    /// Mean log factor over the second half of the horizon.
    pub slope: f64,
    pub sufficient_condition_met: bool,
    /// Same for the Weyl-bound factors; only for symmetric partitions.
    pub weyl_log_partial_sums: Option<Vec<f64>>,
    pub weyl_slope: Option<f64>,
    pub weyl_condition_met: Option<bool>,
    pub not_a_proof: bool,
}

pub fn product_convergence_check(
    g: &SignedGraph,
    schedule: &Schedule,
    horizon: usize,
) -> Result<ProductDiagnostic> {
    product_convergence_check_with(g, schedule, horizon, &Tolerances::default())
}

pub fn product_convergence_check_with(
    g: &SignedGraph,
    schedule: &Schedule,
    horizon: usize,
    tol: &Tolerances,
) -> Result<ProductDiagnostic> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    schedule.validate(horizon as u64)?;
    let symmetric = g.is_bidirectional();

    let mut cache: Option<((f64, f64), f64, Option<f64>)> = None;
    let mut logs = Vec::with_capacity(horizon);
    let mut weyl_logs = Vec::with_capacity(if symmetric { horizon } else { 0 });
    for k in 0..horizon {
        let gains = schedule.at(k as u64);
        let (factor, weyl) = match cache {
            Some((key, f, w)) if key == gains => (f, w),
            _ => {
                let f = contraction_factor(g, gains.0, gains.1, tol)?;
                let w = if symmetric {
                    Some(weyl_bound_with(g, gains.0, gains.1, tol)?)
                } else {
                    None
                };
                cache = Some((gains, f, w));
                (f, w)
            }
        };
        logs.push(safe_ln(factor));
        if let Some(w) = weyl {
            weyl_logs.push(safe_ln(w));
        }
    }

    let slope = tail_slope(&logs);
    let log_partial_sums = partial_sums(&logs);
    let (weyl_log_partial_sums, weyl_slope, weyl_condition_met) = if symmetric {
        let s = tail_slope(&weyl_logs);
        (
            Some(partial_sums(&weyl_logs)),
            Some(s),
            Some(s < -tol.product_slope),
        )
    } else {
        (None, None, None)
    };
    Ok(ProductDiagnostic {
        log_partial_sums,
        slope,
        sufficient_condition_met: slope < -tol.product_slope,
        weyl_log_partial_sums,
        weyl_slope,
        weyl_condition_met,
        not_a_proof: true,
    })
}

/// `λ_max(W̄ᵀΠW̄)`.
pub fn contraction_factor(g: &SignedGraph, alpha: f64, beta: f64, tol: &Tolerances) -> Result<f64> {
    let w = mean_update(g, alpha, beta)?;
    let m = w.transpose() * project(&w);
    let sym = (&m + m.transpose()) * 0.5;
    let values = spectral::sym_values(&sym, tol)?;
    Ok(values[values.len() - 1])
}

fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn partial_sums(logs: &[f64]) -> Vec<f64> {
    logs.iter()
        .scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc)
        })
        .collect()
}

/// Mean of the second half of `logs`, i.e. the secant slope of the partial sums.
pub(crate) fn tail_slope(logs: &[f64]) -> f64 {
    let start = logs.len() / 2;
    let tail = &logs[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Hypothesis helper reused by reports: does the graph admit the closed form?
pub fn admits_closed_form(g: &SignedGraph) -> bool {
    g.is_complete_uniform() && graph::is_symmetric(g.p_rep())
}
