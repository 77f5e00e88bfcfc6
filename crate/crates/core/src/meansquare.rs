//! Second-moment operator `E[WᵀΠW]` and the mean-square criteria.
//!
//! For arc `(j, i)` the realisation is `W = I + c·e_i dᵀ` with
//! `d = e_i − e_j` and `c = −α` (attractive) or `c = β` (repulsive). With
//! `u = Πe_i`,
//!
//! ```text
//! WᵀΠW = Π + c(d uᵀ + u dᵀ) + c²(1 − 1/n) d dᵀ
//! ```
//!
//! so each arc touches only rows and columns `i` and `j`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expectation::{consensus_projector, partial_sums, tail_slope};
use crate::graph::SignedGraph;
use crate::schedule::{check_gains, Schedule};
use crate::spectral;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeanSquareClass {
    ConvergesSufficient,
    DivergesSufficient,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondMomentReport {
    #[serde(skip)]
    pub operator: DMatrix<f64>,
    /// Full spectrum, ascending.
    #[serde(skip)]
    pub spectrum: Vec<f64>,
    pub lambda_max: f64,
    /// Second entry of the descending full spectrum.
    pub lambda2_full: f64,
    /// Smallest eigenvalue on the subspace orthogonal to 𝟏. This is the
    /// Rayleigh lower bound for `E|y⁺|²/|y|²` and drives the divergence test.
    pub lambda2_restricted: f64,
    pub classification: MeanSquareClass,
    pub diagnostics: Option<MeanSquareDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanSquareDiagnostics {
    pub log_max_partial_sums: Vec<f64>,
    pub log_lambda2_partial_sums: Vec<f64>,
    pub max_slope: f64,
    pub lambda2_slope: f64,
    pub convergence_condition_met: bool,
    pub divergence_condition_met: bool,
    pub not_a_proof: bool,
}

pub fn second_moment_operator(g: &SignedGraph, alpha: f64, beta: f64) -> Result<DMatrix<f64>> {
    check_gains(alpha, beta)?;
    let n = g.n();
    let nf = n as f64;
    let inv = 1.0 / nf;
    let mut op = DMatrix::<f64>::zeros(n, n);
    let mut mass = 0.0;

    let arcs = g
        .att_arcs()
        .iter()
        .map(|a| (a, -alpha))
        .chain(g.rep_arcs().iter().map(|a| (a, beta)));
    for (arc, c) in arcs {
        let prob = arc.weight / nf;
        mass += prob;
        let (i, j) = (arc.target, arc.source);
        // c·(d uᵀ + u dᵀ), u_k = δ_ik − 1/n, d = e_i − e_j
        let scale = prob * c;
        for k in 0..n {
            let u_k = if k == i { 1.0 - inv } else { -inv };
            op[(i, k)] += scale * u_k;
            op[(j, k)] -= scale * u_k;
            op[(k, i)] += scale * u_k;
            op[(k, j)] -= scale * u_k;
        }
        // c²(1 − 1/n) d dᵀ
        let quad = prob * c * c * (1.0 - inv);
        op[(i, i)] += quad;
        op[(j, j)] += quad;
        op[(i, j)] -= quad;
        op[(j, i)] -= quad;
    }
    // every realisation, and the no-event remainder, contributes Π once
    let pi_weight = mass + (1.0 - mass).max(0.0);
    op += consensus_projector(n) * pi_weight;
    Ok(op)
}

/// Orthonormal basis of `𝟏⊥` (Helmert contrasts), one vector per column.
pub fn consensus_complement_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |row, col| {
        let k = col + 1;
        let norm = ((k * (k + 1)) as f64).sqrt();
        if row < k {
            1.0 / norm
        } else if row == k {
            -(k as f64) / norm
        } else {
            0.0
        }
    })
}

struct Extremes {
    spectrum: Vec<f64>,
    lambda_max: f64,
    lambda2_full: f64,
    lambda2_restricted: f64,
}

fn extremes(op: &DMatrix<f64>, tol: &Tolerances) -> Result<Extremes> {
    let n = op.nrows();
    let spectrum = spectral::sym_values(op, tol)?;
    let q = consensus_complement_basis(n);
    let restricted = q.transpose() * op * &q;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let r = spectral::sym_values(&restricted, tol)?;
    Ok(Extremes {
        lambda_max: spectrum[n - 1],
        lambda2_full: spectrum[n - 2],
        lambda2_restricted: r[0],
        spectrum,
    })
}

pub fn ms_classify(
    g: &SignedGraph,
    schedule: &Schedule,
    horizon: usize,
) -> Result<SecondMomentReport> {
    ms_classify_with(g, schedule, horizon, &Tolerances::default())
}

pub fn ms_classify_with(
    g: &SignedGraph,
    schedule: &Schedule,
    horizon: usize,
    tol: &Tolerances,
) -> Result<SecondMomentReport> {
    schedule.validate(horizon.max(1) as u64)?;
    let (a0, b0) = schedule.at(0);
    let operator = second_moment_operator(g, a0, b0)?;
    let first = extremes(&operator, tol)?;
    let margin = tol.mean_square_margin;

    if schedule.is_constant() {
        let classification = if first.lambda_max < 1.0 - margin {
            MeanSquareClass::ConvergesSufficient
        } else if first.lambda2_restricted > 1.0 + margin {
            MeanSquareClass::DivergesSufficient
        } else {
            MeanSquareClass::Inconclusive
        };
        return Ok(SecondMomentReport {
            operator,
            spectrum: first.spectrum,
            lambda_max: first.lambda_max,
            lambda2_full: first.lambda2_full,
            lambda2_restricted: first.lambda2_restricted,
            classification,
            diagnostics: None,
        });
    }

    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut max_logs = Vec::with_capacity(horizon);
    let mut low_logs = Vec::with_capacity(horizon);
    let mut cache: Option<((f64, f64), f64, f64)> = None;
    for k in 0..horizon {
        let gains = schedule.at(k as u64);
        let (hi, lo) = match cache {
            Some((key, hi, lo)) if key == gains => (hi, lo),
            _ => {
                let e = extremes(&second_moment_operator(g, gains.0, gains.1)?, tol)?;
                cache = Some((gains, e.lambda_max, e.lambda2_restricted));
                (e.lambda_max, e.lambda2_restricted)
            }
        };
        max_logs.push(if hi > 0.0 { hi.ln() } else { f64::NEG_INFINITY });
        low_logs.push(if lo > 0.0 { lo.ln() } else { f64::NEG_INFINITY });
    }
    let max_slope = tail_slope(&max_logs);
    let lambda2_slope = tail_slope(&low_logs);
    let convergence_condition_met = max_slope < -tol.product_slope;
    let divergence_condition_met = lambda2_slope > tol.product_slope;
    let classification = if convergence_condition_met {
        MeanSquareClass::ConvergesSufficient
    } else if divergence_condition_met {
        MeanSquareClass::DivergesSufficient
    } else {
        MeanSquareClass::Inconclusive
    };
    Ok(SecondMomentReport {
        operator,
        spectrum: first.spectrum,
        lambda_max: first.lambda_max,
        lambda2_full: first.lambda2_full,
        lambda2_restricted: first.lambda2_restricted,
        classification,
        diagnostics: Some(MeanSquareDiagnostics {
            log_max_partial_sums: partial_sums(&max_logs),
            log_lambda2_partial_sums: partial_sums(&low_logs),
            max_slope,
            lambda2_slope,
            convergence_condition_met,
            divergence_condition_met,
            not_a_proof: true,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete_uniform;

    #[test]
    fn zero_gains_give_projector() {
        let g = complete_uniform(4, &[(1, 2)]).unwrap();
        let op = second_moment_operator(&g, 0.0, 0.0).unwrap();
        assert!((op - consensus_projector(4)).amax() < 1e-15);
        let r = ms_classify(&g, &Schedule::constant(0.0, 0.0), 1).unwrap();
        assert_eq!(r.classification, MeanSquareClass::Inconclusive);
        assert!((r.lambda_max - 1.0).abs() < 1e-12);
        assert!((r.lambda2_restricted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helmert_basis_is_orthonormal_and_orthogonal_to_ones() {
        let q = consensus_complement_basis(6);
        assert!((q.transpose() * &q - DMatrix::identity(5, 5)).amax() < 1e-14);
        assert!((q.transpose() * DMatrix::from_element(6, 1, 1.0)).amax() < 1e-14);
    }

    #[test]
    fn ones_in_kernel() {
        let g = complete_uniform(5, &[(1, 2), (3, 4)]).unwrap();
        let op = second_moment_operator(&g, 0.7, 2.0).unwrap();
        let ones = DMatrix::from_element(5, 1, 1.0);
        assert!((&op * ones).amax() < 1e-12);
    }

    #[test]
    fn attractive_graph_converges_in_mean_square() {
        for n in [3, 5, 7] {
            let g = complete_uniform(n, &[]).unwrap();
            let r = ms_classify(&g, &Schedule::constant(0.6, 0.0), 1).unwrap();
            assert_eq!(r.classification, MeanSquareClass::ConvergesSufficient);
        }
    }

    #[test]
    fn strong_repulsion_pushes_lambda_max_past_one() {
        let g = complete_uniform(4, &[(1, 2)]).unwrap();
        let r = ms_classify(&g, &Schedule::constant(1.0, 5.0), 1).unwrap();
        assert!(r.lambda_max > 1.0);
        assert!(r.lambda2_restricted <= r.lambda_max);
        assert!(r.lambda2_full <= r.lambda_max);
    }

    #[test]
    fn time_varying_schedule_reports_diagnostics() {
        let g = complete_uniform(3, &[]).unwrap();
        let s = Schedule::new(
            crate::schedule::Gain::Sequence(vec![0.5, 0.4, 0.3]),
            crate::schedule::Gain::Constant(0.0),
        );
        let r = ms_classify(&g, &s, 40).unwrap();
        let d = r.diagnostics.unwrap();
        assert!(d.convergence_condition_met);
        assert!(!d.divergence_condition_met);
        assert_eq!(d.log_max_partial_sums.len(), 40);
    }
}
