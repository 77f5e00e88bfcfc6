//! Flag and config-file handling. Flags win over the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use signed_gossip::{Gain, Schedule};

#[derive(Debug, Parser)]
#[command(
    name = "signed-gossip",
    version,
    about = "Gossip consensus over signed graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expectation and mean-square analysis of one instance.
    Analyze(Common),
    /// Critical repulsive gain β⋆ for a given α.
    Threshold {
        #[command(flatten)]
        common: Common,
        /// Bracket width for the bisection.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Monte Carlo simulation of the gossip process.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state, comma separated; defaults to 1,2,…,n.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// Fraction of G(n, p) repulsive partitions with a contracting mean.
    ErSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Edge probabilities, comma separated.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
    },
    /// Window conditions Φ and Q for time-varying gains.
    Conditions {
        #[command(flatten)]
        common: Common,
        /// Window length for Q; defaults to n.
        #[arg(long)]
        z: Option<u64>,
        /// Number of windows to evaluate.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Writes a generated graph as a graph file.
    Generate(Common),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Graph file (JSON or TOML) or generator: complete:N[:a-b,…], ring:N[:a-b,…], er:N:P:SEED.
    #[arg(long)]
    pub graph: Option<String>,
    /// Attractive gain: a number, a comma list, or harmonic:SCALE[:OFFSET[:EXPONENT]].
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Repulsive gain, same forms as --alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Number of gossip steps (simulate) or schedule steps (analyze).
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Monte Carlo trials, or graph samples per grid point for er-sweep.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file, written atomically; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON or TOML file supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub graph: Option<String>,
    pub alpha: Option<Gain>,
    pub beta: Option<Gain>,
    pub horizon: Option<u64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub x0: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub n: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub z: Option<u64>,
    pub count: Option<usize>,
    #[serde(skip)]
    dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ConfigFile = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        cfg.dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Resolves a path from the config file against the file's directory.
    fn relative(&self, p: &str) -> String {
        match &self.dir {
            Some(dir) if !crate::graphs::is_generator(p) && Path::new(p).is_relative() => {
                dir.join(p).to_string_lossy().into_owned()
            }
            _ => p.to_string(),
        }
    }
}

/// Flags merged over the config file.
#[derive(Debug)]
pub struct Settings {
    pub graph: Option<String>,
    pub alpha: Option<Gain>,
    pub beta: Option<Gain>,
    pub horizon: Option<u64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub config: ConfigFile,
}

impl Settings {
    pub fn resolve(common: &Common) -> Result<Self> {
        let config = match &common.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let gain = |flag: &Option<String>, cfg: &Option<Gain>| -> Result<Option<Gain>> {
            match flag {
                Some(text) => parse_gain(text).map(Some),
                None => Ok(cfg.clone()),
            }
        };
        Ok(Settings {
            graph: common
                .graph
                .clone()
                .or_else(|| config.graph.as_deref().map(|g| config.relative(g))),
            alpha: gain(&common.alpha, &config.alpha)?,
            beta: gain(&common.beta, &config.beta)?,
            horizon: common.horizon.or(config.horizon),
            trials: common.trials.or(config.trials),
            seed: common.seed.or(config.seed),
            out: common.out.clone().or_else(|| config.out.clone()),
            format: common.format.or(config.format).unwrap_or_default(),
            config,
        })
    }

    pub fn graph_spec(&self) -> Result<&str> {
        self.graph.as_deref().context("--graph is required")
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let alpha = self.alpha.clone().context("--alpha is required")?;
        let beta = self.beta.clone().unwrap_or(Gain::Constant(0.0));
        Ok(Schedule::new(alpha, beta))
    }

    pub fn constant_gains(&self) -> Result<(f64, f64)> {
        match self.schedule()?.constant_gains() {
            Some(g) => Ok(g),
            None => bail!("this command needs constant gains"),
        }
    }

    /// Stochastic commands refuse to pick a seed on the user's behalf.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .context("--seed is required for stochastic commands")
    }
}

pub fn parse_gain(text: &str) -> Result<Gain> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("harmonic:") {
        let parts = rest
            .split(':')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad number {p:?} in gain {text:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let (scale, offset, exponent) = match parts[..] {
            [s] => (s, 1.0, 1.0),
            [s, o] => (s, o, 1.0),
            [s, o, e] => (s, o, e),
            _ => bail!("harmonic gain takes SCALE[:OFFSET[:EXPONENT]], got {text:?}"),
        };
        return Ok(Gain::Harmonic {
            scale,
            offset,
            exponent,
        });
    }
    let values = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad gain {text:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match values.as_slice() {
        [v] => Gain::Constant(*v),
        _ => Gain::Sequence(values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_forms() {
        assert_eq!(parse_gain("0.5").unwrap(), Gain::Constant(0.5));
        assert_eq!(parse_gain("1,0.5").unwrap(), Gain::Sequence(vec![1.0, 0.5]));
        assert_eq!(
            parse_gain("harmonic:2:3").unwrap(),
            Gain::Harmonic {
                scale: 2.0,
                offset: 3.0,
                exponent: 1.0
            }
        );
        assert!(parse_gain("harmonic:1:2:3:4").is_err());
        assert!(parse_gain("fast").is_err());
    }

    #[test]
    fn config_formats() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        std::fs::write(
            &toml_path,
            "graph = \"g.json\"\nalpha = 0.5\nbeta = [1.0, 2.0]\nseed = 3\n",
        )
        .unwrap();
        let cfg = ConfigFile::load(&toml_path).unwrap();
        assert_eq!(cfg.beta, Some(Gain::Sequence(vec![1.0, 2.0])));
        assert_eq!(
            cfg.relative("g.json"),
            dir.path().join("g.json").to_string_lossy()
        );
        assert_eq!(cfg.relative("complete:4"), "complete:4");

        let json_path = dir.path().join("c.json");
        std::fs::write(
            &json_path,
            r#"{"alpha": {"scale": 1.0, "offset": 2.0}, "format": "csv"}"#,
        )
        .unwrap();
        let cfg = ConfigFile::load(&json_path).unwrap();
        assert_eq!(cfg.format, Some(Format::Csv));
        assert!(matches!(cfg.alpha, Some(Gain::Harmonic { .. })));

        std::fs::write(&json_path, r#"{"alfa": 1}"#).unwrap();
        assert!(ConfigFile::load(&json_path).is_err());
    }
}
