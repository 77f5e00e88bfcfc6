use rayon::prelude::*;
use serde::Serialize;

use super::{
    apply, check_run_inputs, classify_run, extremes, select_arc, EmpiricalClass, HittingTime,
    StateVector, TrendFit,
};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::schedule::Schedule;
use crate::seeds::trial_rng;
use crate::tolerances;

/// Trials per accumulation block. Blocks are merged in index order, so the
/// result does not depend on the number of worker threads.
const BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count / total;
        self.m2 += other.m2 + delta * delta * self.count * other.count / total;
        self.count = total;
    }

    fn standard_error(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2 / (self.count - 1.0) / self.count).sqrt()
        }
    }
}

struct Block {
    // (horizon+1) × n, row-major by step
    y: Vec<Moments>,
    y_sq: Vec<Moments>,
    spread: Vec<Moments>,
    pair_max: Vec<Moments>,
    pair_peak: Vec<f64>,
    hits: Vec<Option<HittingTime>>,
    classes: Vec<EmpiricalClass>,
    diverged: usize,
}

impl Block {
    fn new(n: usize, steps: usize) -> Self {
        Self {
            y: vec![Moments::default(); steps * n],
            y_sq: vec![Moments::default(); steps],
            spread: vec![Moments::default(); steps],
            pair_max: vec![Moments::default(); n * n],
            pair_peak: vec![0.0; n * n],
            hits: Vec::new(),
            classes: Vec::new(),
            diverged: 0,
        }
    }

    fn record(&mut self, k: usize, n: usize, x: &[f64], spread: f64) {
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut sq = 0.0;
        for (slot, v) in self.y[k * n..(k + 1) * n].iter_mut().zip(x) {
            let y = v - mean;
            slot.push(y);
            sq += y * y;
        }
        self.y_sq[k].push(sq);
        self.spread[k].push(spread);
    }

    fn merge(&mut self, other: Block) {
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            a.merge(b);
        }
        for (a, b) in self.y_sq.iter_mut().zip(&other.y_sq) {
            a.merge(b);
        }
        for (a, b) in self.spread.iter_mut().zip(&other.spread) {
            a.merge(b);
        }
        for (a, b) in self.pair_max.iter_mut().zip(&other.pair_max) {
            a.merge(b);
        }
        for (a, b) in self.pair_peak.iter_mut().zip(&other.pair_peak) {
            *a = a.max(*b);
        }
        self.hits.extend(other.hits);
        self.classes.extend(other.classes);
        self.diverged += other.diverged;
    }
}

/// Aggregated statistics of an ensemble of independent runs. Series are
/// indexed by step `k = 0..=horizon`.
#[derive(Debug, Clone, Serialize)]
pub struct Ensemble {
    pub n: usize,
    pub horizon: u64,
    pub trials: usize,
    pub seed: u64,
    pub mean_y: Vec<Vec<f64>>,
    pub se_y: Vec<Vec<f64>>,
    /// `E|y(k)|²`.
    pub mean_y_sq: Vec<f64>,
    pub se_y_sq: Vec<f64>,
    pub mean_spread: Vec<f64>,
    pub se_spread: Vec<f64>,
    /// Per trial, in trial order.
    pub hitting_times: Vec<Option<HittingTime>>,
    pub empirical: Vec<EmpiricalClass>,
    /// Mean over trials of `max_k |x_i(k) − x_j(k)|`, `n × n`.
    pub pair_max_mean: Vec<Vec<f64>>,
    /// Largest `|x_i(k) − x_j(k)|` seen in any trial.
    pub pair_max_peak: Vec<Vec<f64>>,
    /// Trials aborted by the overflow guard. Their last finite state is
    /// carried forward so that no trial is dropped from the averages.
    pub diverged_trials: usize,
}

impl Ensemble {
    pub fn fraction(&self, class: EmpiricalClass) -> f64 {
        self.empirical.iter().filter(|&&c| c == class).count() as f64 / self.trials as f64
    }

    /// Majority verdict over trials, `Undecided` without a strict majority.
    pub fn verdict(&self) -> EmpiricalClass {
        [EmpiricalClass::Converging, EmpiricalClass::Diverging]
            .into_iter()
            .find(|&c| self.fraction(c) > 0.5)
            .unwrap_or(EmpiricalClass::Undecided)
    }

    pub fn exact_hit_fraction(&self) -> f64 {
        self.hitting_times
            .iter()
            .filter(|h| matches!(h, Some(HittingTime { exact: true, .. })))
            .count() as f64
            / self.trials as f64
    }

    /// Mean exact hitting time over the trials that reached exact consensus.
    pub fn mean_exact_hitting_time(&self) -> Option<f64> {
        let hits: Vec<f64> = self
            .hitting_times
            .iter()
            .filter_map(|h| h.filter(|h| h.exact).map(|h| h.step as f64))
            .collect();
        (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64)
    }
}

fn simulate_block(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &[f64],
    horizon: u64,
    seed: u64,
    trials: std::ops::Range<usize>,
) -> Block {
    let n = g.n();
    let steps = horizon as usize + 1;
    let mut block = Block::new(n, steps);
    let (lo, hi) = extremes(x0);
    let initial_spread = hi - lo;
    let approx_level = tolerances::APPROXIMATE_CONSENSUS * initial_spread;

    for trial in trials {
        let mut rng = trial_rng(seed, trial as u64);
        let mut x = x0.to_vec();
        let mut spread = initial_spread;
        let mut exact = (spread == 0.0).then_some(HittingTime {
            step: 0,
            exact: true,
        });
        let mut approx: Option<HittingTime> = None;
        let mut frozen = exact.is_some();
        let mut diverged = false;
        let mut trend = TrendFit::new(horizon);
        let mut pair = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                pair[i * n + j] = (x[i] - x[j]).abs();
            }
        }
        block.record(0, n, &x, spread);

        for k in 0..horizon {
            if !frozen {
                let (alpha, beta) = schedule.at(k);
                let arc = select_arc(g, &mut rng);
                let finite = apply(&mut x, arc, alpha, beta);
                let (lo, hi) = extremes(&x);
                spread = hi - lo;
                let i = arc.target;
                for j in 0..n {
                    let d = (x[i] - x[j]).abs();
                    if d > pair[i * n + j] {
                        pair[i * n + j] = d;
                        pair[j * n + i] = d;
                    }
                }
                let now = k + 1;
                if spread == 0.0 {
                    exact = Some(HittingTime {
                        step: now,
                        exact: true,
                    });
                    frozen = true;
                } else if approx.is_none() && spread <= approx_level {
                    approx = Some(HittingTime {
                        step: now,
                        exact: false,
                    });
                }
                trend.push(now, spread);
                if !finite {
                    diverged = true;
                    frozen = true;
                }
            }
            block.record(k as usize + 1, n, &x, spread);
        }

        let hit = exact.or(approx);
        block
            .classes
            .push(classify_run(hit, diverged, trend.slope()));
        block.hits.push(hit);
        block.diverged += diverged as usize;
        for (idx, d) in pair.iter().enumerate() {
            block.pair_max[idx].push(*d);
            block.pair_peak[idx] = block.pair_peak[idx].max(*d);
        }
    }
    block
}

/// Runs `trials` independent trajectories; trial `t` uses stream `t` of `seed`.
pub fn monte_carlo(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
    trials: usize,
    seed: u64,
) -> Result<Ensemble> {
    check_run_inputs(g, schedule, x0, horizon)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = g.n();
    let steps = horizon as usize + 1;
    let blocks = trials.div_ceil(BLOCK);
    // bound peak memory: only a wave of blocks is alive at once
    let wave = (rayon::current_num_threads() * 2).max(1);

    let mut total = Block::new(n, steps);
    for start in (0..blocks).step_by(wave) {
        let end = (start + wave).min(blocks);
        let done: Vec<Block> = (start..end)
            .into_par_iter()
            .map(|b| {
                let range = b * BLOCK..((b + 1) * BLOCK).min(trials);
                simulate_block(g, schedule, x0.values(), horizon, seed, range)
            })
            .collect();
        for b in done {
            total.merge(b);
        }
    }

    let per_step = |m: &[Moments]| -> (Vec<f64>, Vec<f64>) {
        (
            m.iter().map(|v| v.mean).collect(),
            m.iter().map(Moments::standard_error).collect(),
        )
    };
    let (mean_y_flat, se_y_flat) = per_step(&total.y);
    let (mean_y_sq, se_y_sq) = per_step(&total.y_sq);
    let (mean_spread, se_spread) = per_step(&total.spread);
    let rows = |flat: &[f64], width: usize| flat.chunks(width).map(<[f64]>::to_vec).collect();
    let pair_mean: Vec<f64> = total.pair_max.iter().map(|m| m.mean).collect();

    Ok(Ensemble {
        n,
        horizon,
        trials,
        seed,
        mean_y: rows(&mean_y_flat, n),
        se_y: rows(&se_y_flat, n),
        mean_y_sq,
        se_y_sq,
        mean_spread,
        se_spread,
        hitting_times: total.hits,
        empirical: total.classes,
        pair_max_mean: rows(&pair_mean, n),
        pair_max_peak: rows(&total.pair_peak, n),
        diverged_trials: total.diverged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub threshold: f64,
    pub trials: usize,
    pub horizon: u64,
    /// `fractions[i][j]`: share of trials with `max_k |x_i(k) − x_j(k)| > threshold`.
    pub fractions: Vec<Vec<f64>>,
    /// Smallest off-diagonal fraction.
    pub min_fraction: f64,
}

/// Empirical check that every pair's disagreement exceeds `threshold` at some
/// point within the horizon.
#[allow(clippy::too_many_arguments)]
pub fn no_survivor_probe(
    g: &SignedGraph,
    schedule: &Schedule,
    x0: &StateVector,
    horizon: u64,
    trials: usize,
    threshold: f64,
    seed: u64,
) -> Result<ProbeReport> {
    check_run_inputs(g, schedule, x0, horizon)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = g.n();
    let exceed: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let mut x = x0.values().to_vec();
            let mut hit = vec![false; n * n];
            let mut open = 0usize;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        if (x[i] - x[j]).abs() > threshold {
                            hit[i * n + j] = true;
                        } else {
                            open += 1;
                        }
                    }
                }
            }
            for k in 0..horizon {
                if open == 0 {
                    break;
                }
                let (alpha, beta) = schedule.at(k);
                let arc = select_arc(g, &mut rng);
                let finite = apply(&mut x, arc, alpha, beta);
                let i = arc.target;
                for j in (0..n).filter(|&j| j != i) {
                    if !hit[i * n + j] && (x[i] - x[j]).abs() > threshold {
                        hit[i * n + j] = true;
                        hit[j * n + i] = true;
                        open -= 2;
                    }
                }
                if !finite {
                    break;
                }
            }
            hit
        })
        .collect();

    let mut fractions = vec![vec![0.0; n]; n];
    for hit in &exceed {
        for i in 0..n {
            for j in 0..n {
                if hit[i * n + j] {
                    fractions[i][j] += 1.0;
                }
            }
        }
    }
    let mut min_fraction = f64::INFINITY;
    for (i, row) in fractions.iter_mut().enumerate() {
        for (j, f) in row.iter_mut().enumerate() {
            *f /= trials as f64;
            if i != j {
                min_fraction = min_fraction.min(*f);
            }
        }
    }
    Ok(ProbeReport {
        threshold,
        trials,
        horizon,
        fractions,
        min_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete_uniform;
    use crate::simulator::{run_with, RunOptions, Stride};

    #[test]
    fn single_trial_matches_run() {
        let g = complete_uniform(4, &[(1, 2)]).unwrap();
        let s = Schedule::constant(0.5, 0.3);
        let x0 = StateVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = monte_carlo(&g, &s, &x0, 60, 1, 77).unwrap();
        let opts = RunOptions {
            stride: Stride::every_step(),
            ..Default::default()
        };
        let t = run_with(&g, &s, &x0, 60, 77, &opts).unwrap();
        for (k, x) in t.snapshots.iter().enumerate() {
            let mean = x.iter().sum::<f64>() / 4.0;
            for (a, b) in e.mean_y[k].iter().zip(x) {
                assert!((a - (b - mean)).abs() < 1e-12);
            }
            assert_eq!(e.mean_spread[k], t.spread[k]);
        }
        assert_eq!(e.hitting_times[0], t.hitting_time);
        assert_eq!(e.empirical[0], t.empirical);
    }

    #[test]
    fn ensemble_is_deterministic_and_thread_independent() {
        let g = complete_uniform(4, &[(1, 2)]).unwrap();
        let s = Schedule::constant(0.5, 0.3);
        let x0 = StateVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let a = monte_carlo(&g, &s, &x0, 30, 300, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| monte_carlo(&g, &s, &x0, 30, 300, 5).unwrap());
        assert_eq!(a.mean_y, b.mean_y);
        assert_eq!(a.se_y_sq, b.se_y_sq);
        assert_eq!(a.hitting_times, b.hitting_times);
    }

    #[test]
    fn probe_on_consensus_start_is_zero() {
        let g = complete_uniform(4, &[(1, 2)]).unwrap();
        let r = no_survivor_probe(
            &g,
            &Schedule::constant(0.5, 3.0),
            &StateVector::consensus(1.0, 4),
            500,
            20,
            1e-9,
            1,
        )
        .unwrap();
        assert_eq!(r.min_fraction, 0.0);
        assert!(r.fractions.iter().flatten().all(|&f| f == 0.0));
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let data: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let mut all = Moments::default();
        data.iter().for_each(|&v| all.push(v));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        data[..17].iter().for_each(|&v| a.push(v));
        data[17..].iter().for_each(|&v| b.push(v));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.m2 - all.m2).abs() < 1e-10);
    }
}
