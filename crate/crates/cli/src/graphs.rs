use std::path::Path;

use anyhow::{bail, Context, Result};
use signed_gossip::{complete_uniform, er_repulsive, ring_uniform, GraphFile, SignedGraph};

const GENERATORS: [&str; 3] = ["complete:", "ring:", "er:"];

pub fn is_generator(spec: &str) -> bool {
    GENERATORS.iter().any(|g| spec.starts_with(g))
}

/// Loads a graph file or evaluates a generator spec.
pub fn load(spec: &str) -> Result<SignedGraph> {
    if is_generator(spec) {
        return generate(spec);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading graph {spec}"))?;
    let file: GraphFile = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).with_context(|| format!("parsing graph {spec}"))?
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing graph {spec}"))?
    };
    Ok(file.build()?)
}

fn generate(spec: &str) -> Result<SignedGraph> {
    let parts: Vec<&str> = spec.split(':').collect();
    let n = || -> Result<usize> {
        parts
            .get(1)
            .context("missing node count")?
            .parse()
            .with_context(|| format!("bad node count in {spec:?}"))
    };
    let graph = match parts[0] {
        "complete" | "ring" => {
            if parts.len() > 3 {
                bail!("expected {}:N[:a-b,…], got {spec:?}", parts[0]);
            }
            let pairs = match parts.get(2) {
                Some(list) => pairs(list)?,
                None => Vec::new(),
            };
            if parts[0] == "complete" {
                complete_uniform(n()?, &pairs)?
            } else {
                ring_uniform(n()?, &pairs)?
            }
        }
        "er" => {
            let [_, _, p, seed] = parts[..] else {
                bail!("expected er:N:P:SEED, got {spec:?}");
            };
            let p: f64 = p
                .parse()
                .with_context(|| format!("bad probability in {spec:?}"))?;
            let seed: u64 = seed
                .parse()
                .with_context(|| format!("bad seed in {spec:?}"))?;
            er_repulsive(n()?, p, seed)?
        }
        _ => unreachable!("checked by is_generator"),
    };
    Ok(graph)
}

fn pairs(list: &str) -> Result<Vec<(usize, usize)>> {
    list.split(',')
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once('-')
                .with_context(|| format!("bad pair {pair:?}"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let g = load("complete:4:1-2").unwrap();
        assert_eq!((g.n(), g.rep_arcs().len()), (4, 2));
        let g = load("ring:6:1-2,4-5").unwrap();
        assert_eq!(g.rep_arcs().len(), 4);
        assert_eq!(load("er:10:0.5:3").unwrap().n(), 10);
        assert!(load("ring:6:1-3").is_err());
        assert!(load("complete:x").is_err());
        assert!(load("er:10:0.5").is_err());
        assert!(load("no/such/file.json").is_err());
    }
}
