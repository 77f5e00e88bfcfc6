use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One gain sequence. Serialises untagged: a number is a constant, an
/// array is an explicit sequence (its last value repeats past the end), an
/// object is the rule `scale / (k + offset)^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Constant(f64),
    Sequence(Vec<f64>),
    Harmonic {
        scale: f64,
        #[serde(default = "one")]
        offset: f64,
        #[serde(default = "one")]
        exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Gain {
    pub fn at(&self, k: u64) -> f64 {
        match self {
            Gain::Constant(v) => *v,
            Gain::Sequence(values) => match values.get(k as usize) {
                Some(v) => *v,
                None => values.last().copied().unwrap_or(0.0),
            },
            Gain::Harmonic {
                scale,
                offset,
                exponent,
            } => scale / (k as f64 + offset).powf(*exponent),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Gain::Constant(_) => true,
            Gain::Sequence(v) => v.windows(2).all(|w| w[0] == w[1]),
            Gain::Harmonic {
                scale, exponent, ..
            } => *scale == 0.0 || *exponent == 0.0,
        }
    }

    fn is_bounded(&self) -> bool {
        match self {
            Gain::Constant(_) | Gain::Sequence(_) => true,
            Gain::Harmonic { exponent, .. } => *exponent >= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha: Gain,
    pub beta: Gain,
}

impl Schedule {
    pub fn constant(alpha: f64, beta: f64) -> Self {
        Self {
            alpha: Gain::Constant(alpha),
            beta: Gain::Constant(beta),
        }
    }

    pub fn new(alpha: Gain, beta: Gain) -> Self {
        Self { alpha, beta }
    }

    /// `(α_k, β_k)`.
    pub fn at(&self, k: u64) -> (f64, f64) {
        (self.alpha.at(k), self.beta.at(k))
    }

    pub fn is_constant(&self) -> bool {
        self.alpha.is_constant() && self.beta.is_constant()
    }

    /// Constant gains, if both sequences are constant.
    pub fn constant_gains(&self) -> Option<(f64, f64)> {
        self.is_constant().then(|| self.at(0))
    }

    pub fn beta_bounded(&self) -> bool {
        self.beta.is_bounded()
    }

    /// Checks `0 ≤ α_k ≤ 1` and `β_k ≥ 0` for every `k < horizon`.
    pub fn validate(&self, horizon: u64) -> Result<()> {
        let steps = if self.is_constant() {
            1
        } else {
            horizon.max(1)
        };
        for k in 0..steps {
            let (a, b) = self.at(k);
            check_gains(a, b).map_err(|e| match e {
                Error::GainRange(msg) => Error::GainRange(format!("step {k}: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }
}

pub(crate) fn check_gains(alpha: f64, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::GainRange(format!("alpha = {alpha} outside [0,1]")));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::GainRange(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    Ok(())
}
