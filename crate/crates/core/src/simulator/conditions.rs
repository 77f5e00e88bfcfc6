//! Window conditions for almost-sure convergence (`Φ`) and divergence (`Q`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::schedule::Schedule;
use crate::tolerances;

/// `Φ_s = 1 − (1 − ∏α/2)(p∗/n)^(n−1) − (1 − (p∗/n)^(n−1))·∏(1+β)`, products
/// over the window `k = s..s+n−1`.
pub fn phi_value(n: usize, p_min: f64, schedule: &Schedule, s: u64) -> f64 {
    let window = s..s + n as u64;
    let alpha_prod: f64 = window.clone().map(|k| schedule.alpha.at(k)).product();
    let growth: f64 = window.map(|k| 1.0 + schedule.beta.at(k)).product();
    let reach = (p_min / n as f64).powi(n as i32 - 1);
    1.0 - (1.0 - alpha_prod / 2.0) * reach - (1.0 - reach) * growth
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiReport {
    pub n: usize,
    pub p_min: f64,
    /// `Φ_{m(n−1)}` for `m = 0..count`.
    pub values: Vec<f64>,
    pub in_unit_interval: Vec<bool>,
    pub partial_sums: Vec<f64>,
    pub beta_bounded: bool,
    /// Every value in `[0,1]` and the tail mean is bounded away from zero.
    pub condition_met: bool,
    pub not_a_proof: bool,
}

pub fn phi_sequence(g: &SignedGraph, schedule: &Schedule, count: usize) -> PhiReport {
    let n = g.n();
    let p_min = g.min_weight();
    let values: Vec<f64> = (0..count as u64)
        .map(|m| phi_value(n, p_min, schedule, m * (n as u64 - 1)))
        .collect();
    let in_unit_interval: Vec<bool> = values.iter().map(|v| (0.0..=1.0).contains(v)).collect();
    let partial_sums = crate::expectation::partial_sums(&values);
    let tail_mean = if values.is_empty() {
        0.0
    } else {
        crate::expectation::tail_slope(&values)
    };
    let beta_bounded = schedule.beta_bounded();
    PhiReport {
        n,
        p_min,
        condition_met: beta_bounded
            && !values.is_empty()
            && in_unit_interval.iter().all(|&b| b)
            && tail_mean > tolerances::PRODUCT_SLOPE,
        values,
        in_unit_interval,
        partial_sums,
        beta_bounded,
        not_a_proof: true,
    }
}

/// `Q(m) = (p∗/n)^Z [log(1/(n−1)) + Σ log(1+β_k)] + (1 − (1 − p*/n)^(E₀Z)) Σ log(1−α_k)`,
/// sums over `k = mZ..(m+1)Z−1`.
pub fn q_value(
    n: usize,
    p_min: f64,
    p_max: f64,
    e0: usize,
    schedule: &Schedule,
    z: u64,
    m: u64,
) -> Result<f64> {
    let window = m * z..(m + 1) * z;
    let mut growth = 0.0;
    let mut shrink = 0.0;
    for k in window {
        let (alpha, beta) = schedule.at(k);
        if alpha >= 1.0 {
            return Err(Error::GainRange(format!(
                "alpha_{k} = {alpha}; the divergence condition needs alpha < 1"
            )));
        }
        growth += beta.ln_1p();
        shrink += (-alpha).ln_1p();
    }
    let nf = n as f64;
    let repel = (p_min / nf).powi(z as i32) * (-(nf - 1.0).ln() + growth);
    let attract = (1.0 - (1.0 - p_max / nf).powf(e0 as f64 * z as f64)) * shrink;
    Ok(repel + attract)
}

#[derive(Debug, Clone, Serialize)]
pub struct QReport {
    pub n: usize,
    pub z: u64,
    pub p_min: f64,
    pub p_max: f64,
    pub e0: usize,
    /// `Q(m)` for `m = 0..count`.
    pub values: Vec<f64>,
    pub running_sums: Vec<f64>,
    /// `Σ_{m≤t} Q(m) / (t+1)`.
    pub running_average: Vec<f64>,
    pub rep_weakly_connected: bool,
    pub not_a_proof: bool,
}

pub fn q_sequence(g: &SignedGraph, schedule: &Schedule, z: u64, count: usize) -> Result<QReport> {
    if z == 0 {
        return Err(Error::InvalidArgument(
            "window length Z must be at least 1".into(),
        ));
    }
    let (n, p_min, p_max, e0) = (g.n(), g.min_weight(), g.max_weight(), g.att_arc_count());
    let values = (0..count as u64)
        .map(|m| q_value(n, p_min, p_max, e0, schedule, z, m))
        .collect::<Result<Vec<_>>>()?;
    let running_sums = crate::expectation::partial_sums(&values);
    let running_average = running_sums
        .iter()
        .enumerate()
        .map(|(t, s)| s / (t + 1) as f64)
        .collect();
    Ok(QReport {
        n,
        z,
        p_min,
        p_max,
        e0,
        values,
        running_sums,
        running_average,
        rep_weakly_connected: g.connectivity().rep_weakly_connected,
        not_a_proof: true,
    })
}
