//! Constructive weight families on arbitrary leafless trees: a mixing family
//! (an eventually-all-2 branch from every vertex within per-vertex budgets),
//! and a staged hypercyclic-non-mixing family whose diagnostics at the anchor
//! oscillate between damped windows (value at most 1 at each `m_k`) and
//! divergence windows (value above `2^k` at each `n_k`), with a transcript
//! that can be re-verified from scratch.

use crate::dynamics::DiagEngine;
use crate::error::{Error, Result};
use crate::spaces::{powq, Agg, DualExp, SpaceKind};
use crate::tree::{Claim, DirectedTree, VertexId};
use crate::weights::WeightFamily;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

fn dual_of(kind: SpaceKind) -> Result<DualExp> {
    Ok(match kind.aggregation()? {
        Agg::Max => DualExp::Infinite,
        Agg::SumPow(q) => DualExp::Finite(q),
    })
}

/// Per-sibling uniform weight value realizing a total budget: under the sum
/// aggregation every child gets `(budget / count)^{1/q}`, under the sup
/// aggregation every child gets the budget itself.
fn sibling_value(agg: Agg, budget: f64, count: usize) -> f64 {
    match agg {
        Agg::Max => budget,
        Agg::SumPow(q) => (budget / count as f64).powf(1.0 / q.value()),
    }
}

/// The mixing family: every sibling set right of the anchor carries one
/// distinguished weight-2 child (the first in rule order) with siblings
/// sharing budget 1; sibling sets left of the anchor share budget 1/2.
pub fn mixing_weights(tree: &DirectedTree, kind: SpaceKind) -> Result<WeightFamily> {
    kind.aggregation()?;
    if tree.classify().leafless != Claim::Exact(true) {
        return Err(Error::HasLeaf(tree.first_leaf().unwrap_or(tree.anchor())));
    }
    Ok(WeightFamily::MixingLineage { dual: dual_of(kind)? })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: u32,
    pub m: u32,
    pub n: u32,
    pub r: u32,
    pub s: u32,
    /// diagnostic at the anchor, depth `m - N_j`, for j = 0..=k
    pub alphas: Vec<f64>,
    pub damp_start: f64,
    pub damp_budget: f64,
    pub damp_end: f64,
    pub lineage_heads: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructionTranscript {
    pub anchor: u32,
    pub space: String,
    /// vertices `v_1 .. v_K` with their generations `N_j`
    pub enumeration: Vec<(u32, i32)>,
    pub stages: Vec<StageRecord>,
}

/// Result of the staged construction; the tree is the extended truncation
/// the weights are defined on.
#[derive(Clone, Debug)]
pub struct Construction {
    pub tree: DirectedTree,
    pub weights: WeightFamily,
    pub transcript: ConstructionTranscript,
}

/// Enumerate `V \ {v0}` breadth-first: by |generation|, ties left before
/// right, then by vertex id.
fn enumerate_vertices(tree: &DirectedTree, count: usize) -> Vec<VertexId> {
    let mut all: Vec<VertexId> = tree.vertices().filter(|&v| v != tree.anchor()).collect();
    all.sort_by_key(|&v| {
        let g = tree.generation_index(v);
        (g.abs(), g, v.0)
    });
    all.truncate(count);
    all
}

/// Diagnostic values at several (vertex, depth) pairs in one DP sweep.
fn diag_at(
    tree: &DirectedTree,
    lam: &[f64],
    agg: Agg,
    requests: &[(VertexId, u32)],
) -> Vec<f64> {
    let edge: Vec<f64> = tree
        .vertices()
        .map(|v| {
            let w = lam[v.index()];
            if w.is_nan() || tree.parent_of(v).is_none() {
                0.0
            } else {
                agg.term(w.abs())
            }
        })
        .collect();
    let engine = DiagEngine::with_edge(tree, agg, edge);
    let max_depth = requests.iter().map(|&(_, d)| d).max().unwrap_or(0);
    let mut out = vec![0.0; requests.len()];
    engine.run(max_depth, |n, values| {
        for (i, &(v, d)) in requests.iter().enumerate() {
            if d == n {
                out[i] = values[v.index()];
            }
        }
    });
    out
}

/// The staged hypercyclic-non-mixing construction.
///
/// Stage `k+1` picks `m_{k+1} = n_k + max(N_0..N_{k+1}) + 1`, damps every
/// anchor-descendant sibling set in the window `(r_k, m_{k+1}]` uniformly so
/// the anchor diagnostic at depth `m_{k+1}` drops to at most 1, reads off the
/// stage quantities `alpha_j`, picks the minimal `n_{k+1}` whose weight-2
/// lineages push every `alpha_j` above `2^{k+1}`, and lays those lineages
/// (first child in rule order) of length `s_{k+1}` from every depth
/// `m_{k+1}-N_j` descendant of `v_j`.
pub fn nonmixing_weights(
    tree: &DirectedTree,
    kind: SpaceKind,
    stages: u32,
    horizon: u32,
) -> Result<Construction> {
    let agg = kind.aggregation()?;
    if tree.classify().leafless != Claim::Exact(true) {
        return Err(Error::HasLeaf(tree.first_leaf().unwrap_or(tree.anchor())));
    }

    let enumeration = enumerate_vertices(tree, stages as usize);
    if enumeration.len() < stages as usize {
        return Err(Error::InvalidSpec(format!(
            "tree has only {} non-anchor vertices for {stages} stages",
            enumeration.len()
        )));
    }
    let gens: Vec<i32> = std::iter::once(0)
        .chain(enumeration.iter().map(|&v| tree.generation_index(v)))
        .collect();
    let verts: Vec<VertexId> = std::iter::once(tree.anchor())
        .chain(enumeration.iter().copied())
        .collect();

    let mut work = tree.clone();
    let mut lam = vec![f64::NAN; work.vertex_count()];
    // anchor-descendant marker, maintained under extension
    let mut below = vec![false; work.vertex_count()];
    below[work.anchor().index()] = true;
    refresh_below(&work, &mut below);

    let ensure_depth = |work: &mut DirectedTree, lam: &mut Vec<f64>, below: &mut Vec<bool>, depth: u32| -> Result<()> {
        if depth > horizon {
            return Err(Error::HorizonExhausted {
                stages,
                needed: depth,
                horizon,
            });
        }
        if work.right_depth() < depth as i32 {
            *work = work.extend_to_horizon(depth as i32, work.left_depth())?;
            lam.resize(work.vertex_count(), f64::NAN);
            below.resize(work.vertex_count(), false);
            refresh_below(work, below);
        }
        Ok(())
    };

    // weights on generations <= 0: every sibling set of a negative-generation
    // parent shares budget 1/2
    for v in work.vertices() {
        if work.generation_index(v) <= -1 && !work.is_frontier(v) {
            let k = work.child_count(v);
            let val = sibling_value(agg, 0.5, k);
            for u in work.children(v) {
                lam[u.index()] = val;
            }
        }
    }

    let mut records: Vec<StageRecord> = Vec::new();
    let mut n_prev: u32 = 0;
    let mut r_prev: u32 = 0;
    for k in 0..stages {
        let max_n = gens[..=(k as usize + 1)].iter().copied().max().unwrap_or(0).max(0) as u32;
        let m = n_prev + max_n + 1;
        ensure_depth(&mut work, &mut lam, &mut below, m)?;

        // damping window (r_prev, m]
        let start = diag_at(&work, &lam, agg, &[(work.anchor(), r_prev)])[0];
        let width = (m - r_prev) as f64;
        let budget = if start <= 0.5 {
            1.0f64.min(1.0)
        } else {
            (1.0 / (2.0 * start)).powf(1.0 / width).min(1.0)
        };
        for g in (r_prev as i32 + 1)..=(m as i32) {
            for v in work.vertices() {
                if work.generation_index(v) != g || !lam[v.index()].is_nan() {
                    continue;
                }
                let p = work.parent_of(v).expect("positive generation has a parent");
                let kcnt = work.child_count(p);
                let b = if below[p.index()] { budget } else { 1.0 };
                let val = sibling_value(agg, b, kcnt);
                for u in work.children(p) {
                    lam[u.index()] = val;
                }
            }
        }
        let damp_end = diag_at(&work, &lam, agg, &[(work.anchor(), m)])[0];

        // stage quantities alpha_j at depth m - N_j
        let reqs: Vec<(VertexId, u32)> = (0..=(k as usize + 1))
            .map(|j| (verts[j], (m as i32 - gens[j]) as u32))
            .collect();
        let alphas = diag_at(&work, &lam, agg, &reqs);

        // minimal n with 2-power lift clearing 2^{k+1} for every j
        let target = 2f64.powi(k as i32 + 1);
        let mut n = m + 1;
        for &g in &gens[..=(k as usize + 1)] {
            n = n.max((m as i32 - g + 1) as u32);
        }
        let lift = |n: u32, j: usize| -> f64 {
            let t = n as i32 - m as i32 + gens[j];
            let factor = 2f64.powi(t);
            match agg {
                Agg::Max => factor * alphas[j],
                Agg::SumPow(q) => powq(factor, q) * alphas[j],
            }
        };
        loop {
            let ok = (0..=(k as usize + 1)).all(|j| lift(n, j) > target);
            if ok {
                break;
            }
            n += 1;
            if n > horizon + max_n {
                return Err(Error::HorizonExhausted { stages, needed: n, horizon });
            }
        }
        let r = n + max_n;
        let s = r - m;
        ensure_depth(&mut work, &mut lam, &mut below, r)?;

        // lay the weight-2 lineages from every depth m - N_j descendant
        let mut heads: Vec<VertexId> = Vec::new();
        let mut seen = vec![false; work.vertex_count()];
        for (&vj, &gj) in verts.iter().zip(&gens).take(k as usize + 2) {
            for u in work.descendants(vj, (m as i32 - gj) as u32)? {
                if !seen[u.index()] {
                    seen[u.index()] = true;
                    heads.push(u);
                }
            }
        }
        for &head in &heads {
            let mut cur = head;
            for _ in 0..s {
                let child = work.child_at(cur, 0);
                debug_assert!(lam[child.index()].is_nan() || lam[child.index()] == 2.0);
                lam[child.index()] = 2.0;
                cur = child;
            }
        }

        // fill the remaining window weights: siblings of a lineage child
        // share budget 1, plain sibling sets share budget 1
        for g in (m as i32 + 1)..=(r as i32) {
            for v in work.vertices() {
                if work.generation_index(v) != g || !lam[v.index()].is_nan() {
                    continue;
                }
                let p = work.parent_of(v).expect("positive generation has a parent");
                let plain: Vec<VertexId> =
                    work.children(p).filter(|u| lam[u.index()].is_nan()).collect();
                let val = sibling_value(agg, 1.0, plain.len());
                for u in plain {
                    lam[u.index()] = val;
                }
            }
        }

        records.push(StageRecord {
            k: k + 1,
            m,
            n,
            r,
            s,
            alphas,
            damp_start: start,
            damp_budget: budget,
            damp_end,
            lineage_heads: heads.len(),
        });
        n_prev = n;
        r_prev = r;
    }

    // neutral fill for anything the stages did not reach (deeper initial
    // materialization); parentless vertices get the inert value 1
    for v in work.vertices() {
        if lam[v.index()].is_nan() {
            match work.parent_of(v) {
                None => lam[v.index()] = 1.0,
                Some(p) => {
                    let plain: Vec<VertexId> =
                        work.children(p).filter(|u| lam[u.index()].is_nan()).collect();
                    let val = sibling_value(agg, 1.0, plain.len());
                    for u in plain {
                        lam[u.index()] = val;
                    }
                }
            }
        }
    }

    let transcript = ConstructionTranscript {
        anchor: work.anchor().0,
        space: kind.to_string(),
        enumeration: enumeration
            .iter()
            .map(|&v| (v.0, tree.generation_index(v)))
            .collect(),
        stages: records,
    };
    Ok(Construction {
        tree: work,
        weights: WeightFamily::Dense(Arc::new(lam)),
        transcript,
    })
}

fn refresh_below(tree: &DirectedTree, below: &mut [bool]) {
    // full walk: extension adds vertices under already-marked parents
    let mut stack = vec![tree.anchor()];
    below[tree.anchor().index()] = true;
    while let Some(v) = stack.pop() {
        for u in tree.children(v) {
            below[u.index()] = true;
            stack.push(u);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClauseReport {
    pub name: String,
    pub pass: bool,
    pub checked: usize,
    /// the worst offender: (description, value, bound)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<(String, f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub clauses: Vec<ClauseReport>,
}

impl VerifyReport {
    pub fn clause(&self, name: &str) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

const TOL: f64 = 1e-9;

/// Re-check every inequality of a construction transcript from scratch
/// against the given weights: negative-side budgets, the stage index
/// inequalities, the damped anchor diagnostics, the divergence inequalities,
/// the global budgets and lineage uniqueness.
pub fn verify_transcript(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    transcript: &ConstructionTranscript,
    kind: SpaceKind,
) -> Result<VerifyReport> {
    let agg = kind.aggregation()?;
    let lam: Vec<f64> = tree.vertices().map(|v| lambda.at(tree, v)).collect();
    let mut clauses = Vec::new();

    // budgets
    let mut neg = ClauseReport { name: "eq-neg".into(), pass: true, checked: 0, worst: None };
    let mut bdd = ClauseReport { name: "eq-bdd".into(), pass: true, checked: 0, worst: None };
    let mut unique =
        ClauseReport { name: "lineage-unique".into(), pass: true, checked: 0, worst: None };
    let r_last = transcript.stages.last().map(|s| s.r).unwrap_or(0);
    for v in tree.vertices() {
        if tree.is_frontier(v) || tree.child_count(v) == 0 {
            continue;
        }
        let g = tree.generation_index(v);
        let mut acc = agg.zero();
        let mut twos = 0usize;
        for u in tree.children(v) {
            let w = lam[u.index()];
            acc = agg.combine(acc, agg.term(w.abs()));
            if w == 2.0 {
                twos += 1;
            }
        }
        if g <= -1 {
            neg.checked += 1;
            if acc > 0.5 + TOL {
                neg.pass = false;
                update_worst(&mut neg.worst, format!("vertex {v}"), acc, 0.5);
            }
        } else if (g as u32) < r_last {
            bdd.checked += 1;
            let budget = agg.term(3.0);
            if acc > budget + TOL {
                bdd.pass = false;
                update_worst(&mut bdd.worst, format!("vertex {v}"), acc, budget);
            }
            let in_window = transcript
                .stages
                .iter()
                .any(|st| st.m <= g as u32 && (g as u32) < st.r);
            if in_window {
                unique.checked += 1;
                if twos > 1 {
                    unique.pass = false;
                    update_worst(&mut unique.worst, format!("vertex {v}"), twos as f64, 1.0);
                }
            }
        }
    }

    // index inequalities
    let mut eq_m = ClauseReport { name: "eq-m".into(), pass: true, checked: 0, worst: None };
    let mut eq_n = ClauseReport { name: "eq-n".into(), pass: true, checked: 0, worst: None };
    let gens: Vec<i32> = std::iter::once(0)
        .chain(transcript.enumeration.iter().map(|&(_, g)| g))
        .collect();
    let mut n_prev = 0u32;
    for st in &transcript.stages {
        let max_n = gens[..=(st.k as usize)].iter().copied().max().unwrap_or(0).max(0) as u32;
        eq_m.checked += 1;
        if st.m <= n_prev + max_n {
            eq_m.pass = false;
            update_worst(
                &mut eq_m.worst,
                format!("stage {}", st.k),
                st.m as f64,
                (n_prev + max_n) as f64,
            );
        }
        eq_n.checked += 1;
        if st.n <= st.m {
            eq_n.pass = false;
            update_worst(&mut eq_n.worst, format!("stage {}", st.k), st.n as f64, st.m as f64);
        }
        n_prev = st.n;
    }

    // anchor diagnostics at each m_k; divergence at each n_k
    let anchor = VertexId(transcript.anchor);
    let verts: Vec<VertexId> = std::iter::once(anchor)
        .chain(transcript.enumeration.iter().map(|&(v, _)| VertexId(v)))
        .collect();
    let mut requests: Vec<(VertexId, u32)> = Vec::new();
    for st in &transcript.stages {
        requests.push((anchor, st.m));
        for &vj in verts.iter().take(st.k as usize + 1) {
            requests.push((vj, st.n));
        }
    }
    let values = diag_at(tree, &lam, agg, &requests);
    let mut eq_nmix = ClauseReport { name: "eq-nmix".into(), pass: true, checked: 0, worst: None };
    let mut eq_hyp = ClauseReport { name: "eq-hyp".into(), pass: true, checked: 0, worst: None };
    let mut idx = 0usize;
    for st in &transcript.stages {
        let at_m = values[idx];
        idx += 1;
        eq_nmix.checked += 1;
        if at_m > 1.0 + TOL {
            eq_nmix.pass = false;
            update_worst(&mut eq_nmix.worst, format!("stage {}", st.k), at_m, 1.0);
        }
        let target = 2f64.powi(st.k as i32);
        for &vj in verts.iter().take(st.k as usize + 1) {
            let d = values[idx];
            idx += 1;
            eq_hyp.checked += 1;
            if d <= target {
                eq_hyp.pass = false;
                update_worst(
                    &mut eq_hyp.worst,
                    format!("stage {} vertex {vj}", st.k),
                    d,
                    target,
                );
            }
        }
    }

    clauses.push(neg);
    clauses.push(eq_m);
    clauses.push(eq_n);
    clauses.push(eq_nmix);
    clauses.push(eq_hyp);
    clauses.push(bdd);
    clauses.push(unique);
    let pass = clauses.iter().all(|c| c.pass);
    Ok(VerifyReport { pass, clauses })
}

fn update_worst(slot: &mut Option<(String, f64, f64)>, label: String, value: f64, bound: f64) {
    let replace = match slot {
        None => true,
        Some((_, v, b)) => (value - *b) > (*v - *b),
    };
    if replace {
        *slot = Some((label, value, bound));
    }
}
