//! `signed-gossip` command-line tool.
//!
//! Exit codes: 0 converges, 2 diverges, 3 critical or inconclusive, 1 error.

mod commands;
mod graphs;
mod settings;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use commands::Outcome;
use settings::{Cli, Command, Settings};

type Runner = Box<dyn FnOnce(&Settings) -> Result<Outcome>>;

fn dispatch(cli: Cli) -> Result<(Outcome, Option<std::path::PathBuf>)> {
    let (common, outcome_of): (_, Runner) = match cli.command {
        Command::Analyze(c) => (c, Box::new(commands::analyze)),
        Command::Threshold { common, tol } => {
            (common, Box::new(move |s| commands::threshold(s, tol)))
        }
        Command::Simulate { common, x0 } => (common, Box::new(move |s| commands::simulate(s, x0))),
        Command::ErSweep { common, n, p_grid } => (
            common,
            Box::new(move |s| commands::er_sweep_cmd(s, n, p_grid)),
        ),
        Command::Conditions { common, z, count } => {
            (common, Box::new(move |s| commands::conditions(s, z, count)))
        }
        Command::Generate(c) => (c, Box::new(commands::generate)),
    };
    let settings = Settings::resolve(&common)?;
    let outcome = outcome_of(&settings)?;
    Ok((outcome, settings.out))
}

/// Writes to a sibling temp file, then renames over the target.
fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = dispatch(cli).and_then(|(outcome, out)| {
        match out {
            Some(path) => write_atomic(&path, &outcome.body)?,
            None => std::io::stdout().write_all(outcome.body.as_bytes())?,
        }
        Ok(outcome.code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
