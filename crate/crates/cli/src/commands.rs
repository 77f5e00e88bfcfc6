use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use signed_gossip::expectation::{check_threshold_hypotheses, threshold_beta_with};
use signed_gossip::export::{ensemble_csv, sweep_csv, trajectory_series_csv};
use signed_gossip::{
    classify_expectation, complete_graph_threshold, er_sweep, er_threshold, monte_carlo,
    ms_classify, phi_sequence, product_convergence_check, q_sequence, run, Classification,
    EmpiricalClass, Gain, MeanSquareClass, SignedGraph, StateVector, Tolerances,
};

use crate::graphs;
use crate::settings::{Format, Settings};

const DEFAULT_HORIZON: u64 = 1000;

/// What a command produced and the exit code it maps to.
pub struct Outcome {
    pub body: String,
    pub code: u8,
}

pub const CONVERGES: u8 = 0;
pub const DIVERGES: u8 = 2;
pub const INCONCLUSIVE: u8 = 3;

fn json_body<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn json_only(s: &Settings, command: &str) -> Result<()> {
    if s.format == Format::Csv {
        bail!("{command} has no CSV output; use --format json");
    }
    Ok(())
}

fn graph_summary(spec: &str, g: &SignedGraph) -> Value {
    json!({
        "source": spec,
        "n": g.n(),
        "attractive_arcs": g.att_arcs().len(),
        "repulsive_arcs": g.rep_arcs().len(),
        "connectivity": g.connectivity(),
    })
}

pub fn analyze(s: &Settings) -> Result<Outcome> {
    json_only(s, "analyze")?;
    let spec = s.graph_spec()?;
    let g = graphs::load(spec)?;
    let schedule = s.schedule()?;
    let horizon = s.horizon.unwrap_or(DEFAULT_HORIZON) as usize;
    let mean_square = ms_classify(&g, &schedule, horizon)?;

    let (body, code) = match schedule.constant_gains() {
        Some((alpha, beta)) => {
            let expectation = classify_expectation(&g, alpha, beta)?;
            let code = match expectation.classification {
                Classification::Converges => CONVERGES,
                Classification::Diverges => DIVERGES,
                Classification::Critical => INCONCLUSIVE,
            };
            let body = json!({
                "graph": graph_summary(spec, &g),
                "alpha": alpha,
                "beta": beta,
                "expectation": expectation,
                "mean_square": mean_square,
            });
            (body, code)
        }
        None => {
            let product = product_convergence_check(&g, &schedule, horizon)?;
            let code = if product.sufficient_condition_met {
                CONVERGES
            } else if mean_square.classification == MeanSquareClass::DivergesSufficient {
                DIVERGES
            } else {
                INCONCLUSIVE
            };
            let body = json!({
                "graph": graph_summary(spec, &g),
                "alpha": schedule.alpha,
                "beta": schedule.beta,
                "horizon": horizon,
                "product": product,
                "mean_square": mean_square,
            });
            (body, code)
        }
    };
    Ok(Outcome {
        body: json_body(&body)?,
        code,
    })
}

pub fn threshold(s: &Settings, width: Option<f64>) -> Result<Outcome> {
    json_only(s, "threshold")?;
    let spec = s.graph_spec()?;
    let g = graphs::load(spec)?;
    let Gain::Constant(alpha) = s.schedule()?.alpha else {
        bail!("threshold needs a constant --alpha");
    };
    let width = width.or(s.config.tol).unwrap_or(1e-9);
    let tol = Tolerances::default();
    check_threshold_hypotheses(&g, &tol)?;
    let bisection = threshold_beta_with(&g, alpha, width, &tol)?;
    let closed_form = g
        .is_complete_uniform()
        .then(|| complete_graph_threshold(&g, alpha))
        .transpose()?;
    let agreement = closed_form.map(|c| (c - bisection).abs() <= 1e-6);
    let body = json!({
        "graph": graph_summary(spec, &g),
        "alpha": alpha,
        "width": width,
        "beta_star_bisection": bisection,
        "beta_star_closed_form": closed_form,
        "agreement": agreement,
    });
    Ok(Outcome {
        body: json_body(&body)?,
        code: CONVERGES,
    })
}

fn empirical_code(class: EmpiricalClass) -> u8 {
    match class {
        EmpiricalClass::Converging => CONVERGES,
        EmpiricalClass::Diverging => DIVERGES,
        EmpiricalClass::Undecided => INCONCLUSIVE,
    }
}

pub fn simulate(s: &Settings, x0: Option<Vec<f64>>) -> Result<Outcome> {
    let seed = s.require_seed()?;
    let spec = s.graph_spec()?;
    let g = graphs::load(spec)?;
    let schedule = s.schedule()?;
    let horizon = s.horizon.unwrap_or(DEFAULT_HORIZON);
    let trials = s.trials.unwrap_or(1);
    let values = x0
        .or_else(|| s.config.x0.clone())
        .unwrap_or_else(|| (1..=g.n()).map(|v| v as f64).collect());
    if values.len() != g.n() {
        bail!(
            "--x0 has {} entries, the graph has {} nodes",
            values.len(),
            g.n()
        );
    }
    let x0 = StateVector::new(values)?;

    if trials == 1 {
        let t = run(&g, &schedule, &x0, horizon, seed)?;
        let code = empirical_code(t.empirical);
        let body = match s.format {
            Format::Csv => trajectory_series_csv(&t),
            Format::Json => json_body(&json!({
                "graph": graph_summary(spec, &g),
                "alpha": schedule.alpha,
                "beta": schedule.beta,
                "seed": seed,
                "trajectory": t,
            }))?,
        };
        return Ok(Outcome { body, code });
    }

    let e = monte_carlo(&g, &schedule, &x0, horizon, trials, seed)?;
    let code = empirical_code(e.verdict());
    let body = match s.format {
        Format::Csv => ensemble_csv(&e),
        Format::Json => json_body(&json!({
            "graph": graph_summary(spec, &g),
            "alpha": schedule.alpha,
            "beta": schedule.beta,
            "verdict": e.verdict(),
            "converging_fraction": e.fraction(EmpiricalClass::Converging),
            "diverging_fraction": e.fraction(EmpiricalClass::Diverging),
            "ensemble": e,
        }))?,
    };
    Ok(Outcome { body, code })
}

pub fn er_sweep_cmd(s: &Settings, n: Option<usize>, grid: Option<Vec<f64>>) -> Result<Outcome> {
    let seed = s.require_seed()?;
    let (alpha, beta) = s.constant_gains()?;
    let n = n.or(s.config.n).context("--n is required")?;
    let grid = grid
        .or_else(|| s.config.p_grid.clone())
        .unwrap_or_else(|| (1..20).map(|i| i as f64 * 0.05).collect());
    let samples = s.trials.unwrap_or(30);
    let points = er_sweep(n, &grid, alpha, beta, samples, seed)?;
    let p_star = er_threshold(alpha, beta)?;
    let body = match s.format {
        Format::Csv => sweep_csv(
            &points,
            &[
                ("n", n.to_string()),
                ("alpha", alpha.to_string()),
                ("beta", beta.to_string()),
                ("samples", samples.to_string()),
                ("seed", seed.to_string()),
                ("p_star", p_star.to_string()),
            ],
        ),
        Format::Json => json_body(&json!({
            "n": n,
            "alpha": alpha,
            "beta": beta,
            "samples": samples,
            "seed": seed,
            "p_star": p_star,
            "points": points,
        }))?,
    };
    Ok(Outcome {
        body,
        code: CONVERGES,
    })
}

pub fn conditions(s: &Settings, z: Option<u64>, count: Option<usize>) -> Result<Outcome> {
    json_only(s, "conditions")?;
    let spec = s.graph_spec()?;
    let g = graphs::load(spec)?;
    let schedule = s.schedule()?;
    let count = count.or(s.config.count).unwrap_or(100);
    let z = z.or(s.config.z).unwrap_or(g.n() as u64);
    let phi = phi_sequence(&g, &schedule, count);
    // Q is undefined once some α_k reaches 1; report why instead of failing
    let q = q_sequence(&g, &schedule, z, count);
    let q_average = q
        .as_ref()
        .ok()
        .and_then(|q| q.running_average.last().copied());
    let code = if phi.condition_met {
        CONVERGES
    } else if q_average.is_some_and(|a| a > signed_gossip::tolerances::TREND_SLOPE) {
        DIVERGES
    } else {
        INCONCLUSIVE
    };
    let q_value = match q {
        Ok(report) => serde_json::to_value(report)?,
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let body = json!({
        "graph": graph_summary(spec, &g),
        "alpha": schedule.alpha,
        "beta": schedule.beta,
        "phi": phi,
        "q": q_value,
    });
    Ok(Outcome {
        body: json_body(&body)?,
        code,
    })
}

pub fn generate(s: &Settings) -> Result<Outcome> {
    json_only(s, "generate")?;
    let g = graphs::load(s.graph_spec()?)?;
    let mut body = g.to_json();
    body.push('\n');
    Ok(Outcome { body, code: 0 })
}
