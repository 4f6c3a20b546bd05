//! Text and JSON rendering for reports. JSON output is deterministic for
//! fixed inputs: ordered maps, no timestamps.

use serde_json::{json, Value};
use std::fmt::Write;
use tsl_core::exact::RatVector;
use tsl_core::*;

pub fn envelope(command: &str, report: Value) -> String {
    json!({"command": command, "report": report}).to_string()
}

pub fn structure_text(r: &StructureReport) -> String {
    let mut out = String::new();
    let claim = |c: Claim| match c {
        Claim::Exact(b) => format!("{b}"),
        Claim::AtHorizon(b) => format!("{b} (at horizon)"),
    };
    writeln!(out, "rooted:        {}", r.rooted).unwrap();
    writeln!(out, "leafless:      {}", claim(r.leafless)).unwrap();
    writeln!(out, "symmetric:     {}", claim(r.symmetric)).unwrap();
    if let Some(f) = r.free_left_end {
        writeln!(out, "free left end: {}", claim(f)).unwrap();
    }
    match r.max_outdegree {
        Degree::Finite(n) => writeln!(
            out,
            "max outdegree: {n}{}",
            if r.max_outdegree_exact { "" } else { " (observed)" }
        )
        .unwrap(),
        Degree::Unbounded => writeln!(out, "max outdegree: unbounded").unwrap(),
    }
    writeln!(out, "branchless Z:  {}", r.branchless_z).unwrap();
    writeln!(
        out,
        "materialized:  {} vertices, generations -{}..{}",
        r.vertices, r.left_depth, r.right_depth
    )
    .unwrap();
    out
}

fn fin(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

pub fn norm_json(r: &NormReport) -> Value {
    json!({
        "boundedness": match r.boundedness {
            Boundedness::Bounded => "bounded",
            Boundedness::Unbounded => "unbounded",
            Boundedness::UnknownAtHorizon => "unknown_at_horizon",
        },
        "value": fin(r.value),
        "arg_sup": r.arg_sup.map(|v| v.0),
        "horizon": r.horizon,
    })
}

pub fn norm_text(r: &NormReport) -> String {
    let mut out = String::new();
    match r.boundedness {
        Boundedness::Bounded => writeln!(out, "norm: {} (exact)", r.value).unwrap(),
        Boundedness::Unbounded => writeln!(out, "norm: unbounded").unwrap(),
        Boundedness::UnknownAtHorizon => writeln!(
            out,
            "norm: >= {} (lower bound at horizon {})",
            r.value, r.horizon
        )
        .unwrap(),
    }
    if let Some(v) = r.arg_sup {
        writeln!(out, "attained near: {v}").unwrap();
    }
    out
}

pub fn vector_json(f: &FinVector, norm: f64) -> Value {
    let values: serde_json::Map<String, Value> = f
        .iter()
        .map(|(v, c)| (v.0.to_string(), json!(c)))
        .collect();
    json!({"values": values, "norm": norm, "support": f.support_len()})
}

pub fn vector_text(f: &FinVector, norm: f64) -> String {
    let mut out = String::new();
    writeln!(out, "support {} vertices, norm {}", f.support_len(), norm).unwrap();
    for (v, c) in f.iter().take(40) {
        writeln!(out, "  {v}: {c}").unwrap();
    }
    if f.support_len() > 40 {
        writeln!(out, "  ... ({} more)", f.support_len() - 40).unwrap();
    }
    out
}

pub fn rat_vector_json(f: &RatVector) -> Value {
    let values: serde_json::Map<String, Value> = f
        .iter()
        .map(|(v, c)| (v.0.to_string(), json!(c.to_string())))
        .collect();
    json!({"values": values, "support": f.support_len()})
}

pub fn rat_vector_text(f: &RatVector) -> String {
    let mut out = String::new();
    writeln!(out, "support {} vertices (exact)", f.support_len()).unwrap();
    for (v, c) in f.iter().take(40) {
        writeln!(out, "  {v}: {c}").unwrap();
    }
    out
}

pub fn verdict_text(v: &Verdict) -> String {
    let mut out = String::new();
    let status = match &v.status {
        Status::Proven => "proven".to_string(),
        Status::Refuted => "refuted".to_string(),
        Status::Supported { horizon } => format!("supported (horizon {horizon})"),
        Status::Undetermined { horizon } => format!("undetermined (horizon {horizon})"),
    };
    writeln!(out, "property: {:?}", v.property).unwrap();
    writeln!(out, "verdict:  {status}").unwrap();
    writeln!(out, "rule:     {}", v.rule).unwrap();
    match &v.evidence {
        Evidence::Leaf { vertex } => writeln!(out, "witness:  leaf at v{vertex}").unwrap(),
        Evidence::NormContraction { norm } => {
            writeln!(out, "witness:  operator norm {norm} <= 1").unwrap()
        }
        Evidence::ClosedForm { quantities } => {
            for (k, val) in quantities {
                writeln!(out, "witness:  {k} = {val}").unwrap();
            }
        }
        Evidence::RootObstruction => {
            writeln!(out, "witness:  the root coordinate of every orbit is 0").unwrap()
        }
        Evidence::EqualCoordinates { first, second } => writeln!(
            out,
            "witness:  orbit coordinates at v{first} and v{second} always agree"
        )
        .unwrap(),
        Evidence::CommonDivergence { vertices, indices } => writeln!(
            out,
            "witness:  {} sampled vertices exceed the threshold jointly at n = {:?}",
            vertices.len(),
            indices
        )
        .unwrap(),
        Evidence::BelowThreshold { vertex, best, threshold } => writeln!(
            out,
            "witness:  v{vertex} peaks at {best} < threshold {threshold}"
        )
        .unwrap(),
        Evidence::LineageAudit { vertices_checked } => writeln!(
            out,
            "witness:  distinguished weight-2 lineages verified at {vertices_checked} vertices"
        )
        .unwrap(),
        Evidence::OrientationReversal { inner_rule } => {
            writeln!(out, "witness:  reversed-orientation rule {inner_rule}").unwrap()
        }
    }
    out
}

pub fn sufficiency_text(r: &SufficiencyReport) -> String {
    let mut out = String::new();
    writeln!(out, "space {}, horizon {}", r.space, r.horizon).unwrap();
    for row in &r.rows {
        writeln!(
            out,
            "v{}: branch-sum diverges: {} | normalized diverges: {} | moment condition: {}{}",
            row.vertex,
            row.necessary_fires,
            row.normalized_fires,
            row.moment_fires,
            match row.parent_fires {
                Some(p) => format!(" | ancestor products vanish: {p}"),
                None => String::new(),
            }
        )
        .unwrap();
        if let Some(last) = row.lambda_sum.last() {
            writeln!(out, "    branch sum at n={}: {}", last.0, last.1).unwrap();
        }
        if let Some(last) = row.normalized.last() {
            writeln!(out, "    normalized at n={}: {}", last.0, last.1).unwrap();
        }
    }
    out
}

pub fn audit_text(r: &AuditReport) -> String {
    let mut out = String::new();
    writeln!(out, "space {}", r.space).unwrap();
    for row in &r.rows {
        write!(
            out,
            "v{} n={}: shift decay {:.6e}, witness norm {:.6e}, inverse residual {:.1e}",
            row.vertex, row.n, row.shift_decay, row.witness_norm, row.right_inverse_residual
        )
        .unwrap();
        if let (Some(gap), Some(img)) = (row.approximant_gap, row.approximant_image) {
            write!(out, ", approximant gap {gap:.6e}, image {img:.6e}").unwrap();
            if let Some(b) = row.bound {
                write!(out, " (bound {b:.6e})").unwrap();
            }
        }
        writeln!(out).unwrap();
    }
    for (v, flag) in &r.decay {
        writeln!(out, "v{v}: witness norms decay: {flag}").unwrap();
    }
    out
}

pub fn verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    for c in &r.clauses {
        write!(
            out,
            "{}: {} ({} checks)",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.checked
        )
        .unwrap();
        if let Some((label, value, bound)) = &c.worst {
            if !c.pass {
                write!(out, " worst {label}: {value} vs bound {bound}").unwrap();
            }
        }
        writeln!(out).unwrap();
    }
    writeln!(out, "overall: {}", if r.pass { "PASS" } else { "FAIL" }).unwrap();
    out
}

pub fn extremal_json(sol: &ExtremalSolution, exact: Option<&str>) -> Value {
    let vector: serde_json::Map<String, Value> = sol
        .vector
        .iter()
        .map(|(v, c)| (v.0.to_string(), json!(c)))
        .collect();
    json!({
        "infimum": sol.value,
        "minimizer": vector,
        "eps_minimizer": sol.eps_minimizer,
        "exact": exact,
    })
}

pub fn extremal_text(sol: &ExtremalSolution, exact: Option<&str>) -> String {
    let mut out = String::new();
    writeln!(out, "infimum: {}", sol.value).unwrap();
    if let Some(e) = exact {
        writeln!(out, "exact:   {e}").unwrap();
    }
    write!(out, "minimizer:").unwrap();
    for (v, c) in sol.vector.iter() {
        write!(out, " x[{}]={}", v.0, c).unwrap();
    }
    writeln!(out).unwrap();
    out
}
