//! File loading, shorthand parsing and serialization helpers.

use anyhow::{anyhow, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;
use tsl_core::exact::{rat_from_f64, RatVector, RatWeights};
use tsl_core::*;

pub fn load_tree(path: &Path) -> Result<DirectedTree> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tree spec {}", path.display()))?;
    let spec: TreeSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing tree spec {}", path.display()))?;
    Ok(DirectedTree::build(&spec)?)
}

/// Accepts `rolewicz:X`, `constant:X`, `dirichlet:Q`, or a weight-spec path.
pub fn load_weights(arg: &str) -> Result<(WeightFamily, bool)> {
    if let Some(x) = arg.strip_prefix("rolewicz:").or_else(|| arg.strip_prefix("constant:")) {
        let v: f64 = x.parse().map_err(|_| anyhow!("bad constant weight '{x}'"))?;
        if v == 0.0 || !v.is_finite() {
            return Err(anyhow!("constant weight must be nonzero finite"));
        }
        return Ok((WeightFamily::Constant(v), false));
    }
    if let Some(q) = arg.strip_prefix("dirichlet:") {
        let q: f64 = q.parse().map_err(|_| anyhow!("bad dirichlet parameter '{q}'"))?;
        return Ok((WeightFamily::Dirichlet { q }, false));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading weights {arg}"))?;
    let spec: WeightSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing weights {arg}"))?;
    let parsed = spec.to_family()?;
    Ok((parsed.family, parsed.phases_discarded))
}

pub fn parse_space(s: &str) -> Result<SpaceKind> {
    Ok(SpaceKind::parse(s)?)
}

pub fn parse_mode(s: &str) -> Result<ExtremalMode> {
    match s {
        "p1" => Ok(ExtremalMode::P1),
        "sup" => Ok(ExtremalMode::Sup),
        other => {
            if let Some(p) = other.strip_prefix("p:") {
                Ok(ExtremalMode::P(PExp::parse(p)?))
            } else {
                Err(anyhow!("unknown mode '{other}' (expected p1, p:P, sup)"))
            }
        }
    }
}

#[derive(serde::Deserialize)]
struct VectorFile {
    values: BTreeMap<String, f64>,
}

pub fn load_vector(path: &Path) -> Result<FinVector> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading vector {}", path.display()))?;
    let file: VectorFile = serde_json::from_str(&text)?;
    let mut out = FinVector::new();
    for (key, value) in file.values {
        let id: u32 = key.parse().map_err(|_| anyhow!("bad vertex id '{key}'"))?;
        out.add_at(VertexId(id), value);
    }
    Ok(out)
}

pub fn load_vector_exact(path: &Path) -> Result<RatVector> {
    let f = load_vector(path)?;
    Ok(RatVector::from_entries(f.iter().map(|(v, c)| (v, rat_from_f64(c)))))
}

/// Bit-exact rational view of a weight family over the materialized tree.
pub fn exact_weights(family: &WeightFamily, tree: &DirectedTree) -> Result<RatWeights> {
    let map: BTreeMap<VertexId, _> = tree
        .vertices()
        .map(|v| (v, rat_from_f64(family.at(tree, v))))
        .collect();
    Ok(RatWeights::Explicit(map))
}

pub fn exact_infimum(scalars: &[f64], mode: ExtremalMode) -> Option<String> {
    let entries: Vec<_> = scalars
        .iter()
        .enumerate()
        .map(|(i, &m)| (VertexId(i as u32), rat_from_f64(m)))
        .collect();
    let (value, power) = tsl_core::exact::infimum_pow_exact(&entries, mode)?;
    Some(if power == 1 {
        format!("{value}")
    } else {
        format!("({value})^(1/{power})")
    })
}

const EXPORT_LIMIT: usize = 200_000;

/// Export a family as an explicit weight spec over the materialized tree.
pub fn write_weights(path: &Path, tree: &DirectedTree, family: &WeightFamily) -> Result<()> {
    if tree.vertex_count() > EXPORT_LIMIT {
        return Err(anyhow!(
            "{} vertices exceed the explicit export limit {EXPORT_LIMIT}; lower the horizon",
            tree.vertex_count()
        ));
    }
    let values: BTreeMap<String, f64> = tree
        .vertices()
        .map(|v| (v.0.to_string(), family.at(tree, v)))
        .collect();
    let spec = serde_json::json!({"kind": "explicit", "values": values});
    write_json(path, &spec)
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
