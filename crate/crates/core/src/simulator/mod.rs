//! Seeded gossip engine.
//!
//! Each meeting slot draws one node uniformly and one of its neighbours from
//! its row of `P`; only the drawn node moves. A step consumes exactly two
//! 64-bit draws from the trial's stream, so runs are reproducible from
//! `(seed, trial)` alone.

mod conditions;
mod ensemble;

pub use conditions::{phi_sequence, phi_value, q_sequence, q_value, PhiReport, QReport};
pub use ensemble::{monte_carlo, no_survivor_probe, Ensemble, ProbeReport};

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ArcKind, SignedGraph};
use crate::schedule::Schedule;
use crate::seeds::{trial_rng, unit};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "state has non-finite entries".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn consensus(value: f64, n: usize) -> Self {
        Self(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `y = x − (𝟏ᵀx/n)𝟏`.
    pub fn disagreement(&self) -> Vec<f64> {
        disagreement(&self.0)
    }

    pub fn spread(&self) -> f64 {
        let (lo, hi) = extremes(&self.0);
        hi - lo
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(s: StateVector) -> Self {
        s.0
    }
}

fn disagreement(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

fn extremes(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// A fired arc: `target` moves using `source`'s value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectedArc {
    pub source: usize,
    pub target: usize,
    pub kind: ArcKind,
}

/// Draws node `i` uniformly, then neighbour `j` with probability `p_ij`.
pub fn select_arc<R: RngCore + ?Sized>(g: &SignedGraph, rng: &mut R) -> SelectedArc {
    let n = g.n();
    let node = ((unit(rng.next_u64()) * n as f64) as usize).min(n - 1);
    let (source, kind) = g.pick_neighbour(node, unit(rng.next_u64()));
    SelectedArc {
        source,
        target: node,
        kind,
    }
}

/// Applies one update in place. Returns false if the new value trips the
/// overflow guard.
pub(crate) fn apply(x: &mut [f64], arc: SelectedArc, alpha: f64, beta: f64) -> bool {
    let xi = x[arc.target];
    let xj = x[arc.source];
    let next = match arc.kind {
        // agreeing nodes stay put; a full-gain step copies bit-for-bit
        _ if xi == xj => xi,
        ArcKind::Attractive if alpha == 1.0 => xj,
        ArcKind::Attractive => (1.0 - alpha) * xi + alpha * xj,
        ArcKind::Repulsive => (1.0 + beta) * xi - beta * xj,
    };
    x[arc.target] = next;
    next.abs() <= tolerances::OVERFLOW_GUARD
}

pub fn step(x: &StateVector, arc: SelectedArc, alpha: f64, beta: f64) -> Result<StateVector> {
    crate::schedule::check_gains(alpha, beta)?;
    if arc.source >= x.len() || arc.target >= x.len() || arc.source == arc.target {
        return Err(Error::InvalidArgument(format!(
            "arc {arc:?} does not fit the state"
        )));
    }
    let mut next = x.0.clone();
    if apply(&mut next, arc, alpha, beta) {
        Ok(StateVector(next))
    } else {
        Err(Error::Overflow {
            node: arc.target + 1,
        })
    }
}

/// Which steps are recorded: every step up to `dense_until`, then at
/// checkpoints growing geometrically by `ratio`. Step 0 and the final step
/// are always recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stride {
    pub dense_until: u64,
    pub ratio: f64,
}

impl Default for Stride {
    fn default() -> Self {
        Self {
            dense_until: 1000,
            ratio: 1.05,
        }
    }
}

impl Stride {
    pub fn every_step() -> Self {
        Self {
            dense_until: u64::MAX,
            ratio: 1.0,
        }
    }

    fn next_after(&self, k: u64) -> u64 {
        if k < self.dense_until {
            k + 1
        } else {
            ((k as f64 * self.ratio).ceil() as u64).max(k + 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub stride: Stride,
    pub record_arcs: bool,
    /// Relative spread treated as consensus when no exact hit occurs.
    pub approx_tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            stride: Stride::default(),
            record_arcs: false,
            approx_tolerance: tolerances::APPROXIMATE_CONSENSUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    Completed,
    /// Aborted by the overflow guard during this step.
    Diverged {
        step: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HittingTime {
    pub step: u64,
    /// False when the hit is against the relative spread tolerance.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmpiricalClass {
    Converging,
    Diverging,
    Undecided,
}

/// Least-squares slope of `log 𝓜(k)` over the last quarter of the horizon.
#[derive(Debug, Clone, Default)]
pub(crate) struct TrendFit {
    start: u64,
    count: f64,
    sum_k: f64,
    sum_kk: f64,
    sum_y: f64,
    sum_ky: f64,
}

impl TrendFit {
    pub(crate) fn new(horizon: u64) -> Self {
        Self {
            start: horizon - horizon / 4,
            ..Default::default()
        }
    }

    pub(crate) fn push(&mut self, k: u64, spread: f64) {
        if k < self.start || spread <= 0.0 {
            return;
        }
        let (kf, y) = ((k - self.start) as f64, spread.ln());
        self.count += 1.0;
        self.sum_k += kf;
        self.sum_kk += kf * kf;
        self.sum_y += y;
        self.sum_ky += kf * y;
    }

    pub(crate) fn slope(&self) -> Option<f64> {
        let denom = self.count * self.sum_kk - self.sum_k * self.sum_k;
        (self.count >= 2.0 && denom > 0.0)
            .then(|| (self.count * self.sum_ky - self.sum_k * self.sum_y) / denom)
    }
}

pub(crate) fn classify_run(
    hit: Option<HittingTime>,
    diverged: bool,
    slope: Option<f64>,
) -> EmpiricalClass {
    if diverged {
        return EmpiricalClass::Diverging;
    }
    if hit.is_some() {
        return EmpiricalClass::Converging;
    }
    match slope {
        Some(s) if s < -tolerances::TREND_SLOPE => EmpiricalClass::Converging,
        Some(s) if s > tolerances::TREND_SLOPE => EmpiricalClass::Diverging,
        _ => EmpiricalClass::Undecided,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub horizon: u64,
    /// Recorded steps; `snapshots`, `min`, `max`, `spread` are indexed alike.
    pub ks: Vec<u64>,
    pub snapshots: Vec<Vec<f64>>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub spread: Vec<f64>,
    pub hitting_time: Option<HittingTime>,
    pub status: RunStatus,
    /// Slope of `log 𝓜(k)` over the last quarter.
    pub log_spread_slope: Option<f64>,
    pub empirical: EmpiricalClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc_log: Option<Vec<SelectedArc>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.snapshots.last().expect("step 0 is always recorded")
    }
}

pub fn run(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    run_with(g, schedule, x0, horizon, seed, &RunOptions::default())
}

pub fn run_with(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory> {
    run_trial(g, schedule, x0, horizon, seed, 0, options)
}

pub(crate) fn check_run_inputs(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if x0.len() != g.n() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries for {} nodes",
            x0.len(),
            g.n()
        )));
    }
    schedule.validate(horizon)
}

pub(crate) fn run_trial(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
    seed: u64,
    trial: u64,
    options: &RunOptions,
) -> Result<Trajectory> {
    check_run_inputs(g, schedule, x0, horizon)?;
    let mut rng = trial_rng(seed, trial);
    let mut x = x0.0.clone();
    let (lo, hi) = extremes(&x);
    let initial_spread = hi - lo;
    let approx_level = options.approx_tolerance * initial_spread;

    let mut traj = Trajectory {
        n: g.n(),
        horizon,
        ks: vec![0],
        snapshots: vec![x.clone()],
        min: vec![lo],
        max: vec![hi],
        spread: vec![initial_spread],
        hitting_time: (initial_spread == 0.0).then_some(HittingTime {
            step: 0,
            exact: true,
        }),
        status: RunStatus::Completed,
        log_spread_slope: None,
        empirical: EmpiricalClass::Undecided,
        arc_log: options.record_arcs.then(Vec::new),
    };
    let mut approx_hit: Option<HittingTime> = None;
    let mut trend = TrendFit::new(horizon);
    let mut next_record = options.stride.next_after(0);

    for k in 0..horizon {
        let (alpha, beta) = schedule.at(k);
        let arc = select_arc(g, &mut rng);
        let finite = apply(&mut x, arc, alpha, beta);
        if let Some(log) = traj.arc_log.as_mut() {
            log.push(arc);
        }
        let now = k + 1;
        let (lo, hi) = extremes(&x);
        let spread = hi - lo;
        if spread == 0.0 && traj.hitting_time.is_none() {
            traj.hitting_time = Some(HittingTime {
                step: now,
                exact: true,
            });
        }
        if approx_hit.is_none() && spread <= approx_level {
            approx_hit = Some(HittingTime {
                step: now,
                exact: false,
            });
        }
        trend.push(now, spread);
        if !finite {
            traj.status = RunStatus::Diverged { step: now };
        }
        if now == next_record || now == horizon || !finite {
            traj.ks.push(now);
            traj.snapshots.push(x.clone());
            traj.min.push(lo);
            traj.max.push(hi);
            traj.spread.push(spread);
            next_record = options.stride.next_after(now);
        }
        if !finite {
            break;
        }
    }
    if traj.hitting_time.is_none() {
        traj.hitting_time = approx_hit;
    }
    traj.log_spread_slope = trend.slope();
    traj.empirical = classify_run(
        traj.hitting_time,
        matches!(traj.status, RunStatus::Diverged { .. }),
        traj.log_spread_slope,
    );
    Ok(traj)
}
