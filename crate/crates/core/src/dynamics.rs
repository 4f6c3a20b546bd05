//! Hypercyclicity / weak-mixing / mixing certification for weighted backward
//! shifts, and the structural obstructions for forward shifts.
//!
//! Verdicts come in four tiers. `Proven` and `Refuted` are issued only by
//! exact symbolic rules: structural obstructions, an exact operator norm at
//! most one, and closed-form families (constant, symmetric with eventually
//! periodic profiles, alternating-stretch trees, the Dirichlet family, the
//! constructed mixing family). Everything else is decided empirically from
//! finite-horizon diagnostic series and reported as `Supported` or
//! `Undetermined` — an asymptotic property is never claimed from a truncation.

use crate::error::{Error, Result};
use crate::exact::rat_from_f64;
use crate::shift::{lambda_from_mu, Boundedness, Direction, ShiftOperator};
use crate::spaces::{powq, Agg, PExp, SpaceKind, SpaceSpec};
use crate::tree::{Claim, DirectedTree, ExtensionRule, VertexId};
use crate::weights::{path_product, WeightFamily};
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// hypercyclic, equivalently weakly mixing for these operators
    Hypercyclic,
    Mixing,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Proven,
    Refuted,
    Supported { horizon: u32 },
    Undetermined { horizon: u32 },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Leaf { vertex: u32 },
    NormContraction { norm: f64 },
    ClosedForm { quantities: BTreeMap<String, f64> },
    RootObstruction,
    EqualCoordinates { first: u32, second: u32 },
    CommonDivergence { vertices: Vec<u32>, indices: Vec<u32> },
    BelowThreshold { vertex: u32, best: f64, threshold: f64 },
    LineageAudit { vertices_checked: usize },
    OrientationReversal { inner_rule: String },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    RootedMain,
    UnrootedMain,
    UnrootedParent,
}

/// One diagnostic series: the space-matched branch-product quantity at a
/// vertex, for 1 <= n <= horizon (anchor-relative generation bookkeeping).
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticSeries {
    pub vertex: u32,
    pub kind: SeriesKind,
    pub values: Vec<(u32, f64)>,
    pub space: String,
    pub anchor: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub property: Property,
    pub status: Status,
    pub rule: String,
    pub evidence: Evidence,
    pub diagnostics: Vec<DiagnosticSeries>,
}

impl Verdict {
    fn exact(property: Property, status: Status, rule: &str, evidence: Evidence) -> Verdict {
        Verdict { property, status, rule: rule.to_string(), evidence, diagnostics: Vec::new() }
    }
}

/// Policy for the empirical tier.
#[derive(Clone, Debug)]
pub struct CertifyPolicy {
    /// diagnostics must exceed this to count as divergence evidence
    pub threshold: f64,
    /// sample every vertex with |generation| <= sample_gen
    pub sample_gen: i32,
    /// largest n for the diagnostic series
    pub horizon: u32,
    /// left materialization bound for unrooted parent diagnostics
    pub left: u32,
    /// vertex budget for auto-extension
    pub max_vertices: usize,
}

impl Default for CertifyPolicy {
    fn default() -> Self {
        CertifyPolicy {
            threshold: 1e3,
            sample_gen: 4,
            horizon: 32,
            left: 8,
            max_vertices: crate::tree::DEFAULT_VERTEX_BUDGET,
        }
    }
}

/// Rolling dynamic program over the materialized tree:
/// `D_0(v) = 1`, `D_n(v) = agg over children u of  term(|lambda_u|) * D_{n-1}(u)`,
/// which equals the space-matched aggregation of `|lambda(v -> u)|` over
/// `X^n(v)` whenever the depth-n ball below `v` is materialized.
pub(crate) struct DiagEngine<'t> {
    tree: &'t DirectedTree,
    agg: Agg,
    edge: Vec<f64>,
}

impl<'t> DiagEngine<'t> {
    pub(crate) fn new(tree: &'t DirectedTree, lambda: &WeightFamily, agg: Agg) -> DiagEngine<'t> {
        let edge = tree
            .vertices()
            .map(|v| {
                if tree.parent_of(v).is_some() {
                    agg.term(lambda.at(tree, v).abs())
                } else {
                    1.0
                }
            })
            .collect();
        DiagEngine { tree, agg, edge }
    }

    /// Engine with an arbitrary per-vertex edge factor (already in
    /// aggregation units).
    pub(crate) fn with_edge(tree: &'t DirectedTree, agg: Agg, edge: Vec<f64>) -> DiagEngine<'t> {
        DiagEngine { tree, agg, edge }
    }

    /// Depths up to which `D_n(v)` is meaningful.
    pub(crate) fn valid_depth(&self, v: VertexId) -> u32 {
        self.tree.subtree_depth(v).unwrap_or(u32::MAX)
    }

    /// Run to `horizon`, invoking `visit(n, values)` for n = 0..=horizon.
    pub(crate) fn run(&self, horizon: u32, mut visit: impl FnMut(u32, &[f64])) {
        let n = self.tree.vertex_count();
        let mut cur = vec![1.0f64; n];
        let mut next = vec![0.0f64; n];
        visit(0, &cur);
        for step in 1..=horizon {
            for v in self.tree.vertices() {
                let mut acc = self.agg.zero();
                for u in self.tree.children(v) {
                    acc = self.agg.combine(acc, self.edge[u.index()] * cur[u.index()]);
                }
                next[v.index()] = acc;
            }
            std::mem::swap(&mut cur, &mut next);
            visit(step, &cur);
        }
    }

    /// `D_n(v)` for a single pair, checking materialization.
    pub(crate) fn value_at(&self, v: VertexId, n: u32) -> Result<f64> {
        if self.valid_depth(v) < n {
            return Err(Error::FrontierHit(v));
        }
        let mut out = 0.0;
        self.run(n, |step, values| {
            if step == n {
                out = values[v.index()];
            }
        });
        Ok(out)
    }
}

/// The rooted diagnostic: `sup_{u in X^n(v)} |lambda(v->u)|` on l1,
/// `sum |lambda(v->u)|^{p*}` on l^p, `sum |lambda(v->u)|` on c0.
pub fn rooted_diagnostic(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    kind: SpaceKind,
    v: VertexId,
    n: u32,
) -> Result<f64> {
    let agg = kind.aggregation()?;
    DiagEngine::new(tree, lambda, agg).value_at(v, n)
}

/// The unrooted pair: the main diagnostic at `v` plus the parent quantity at
/// `w = prt^n(v)`:
/// l1: `max(1, sup_{u in X^n(w)} |lambda(w->u)|) / |lambda(w->v)|`;
/// l^p: `(1 + sum_{u} |lambda(w->u)|^{p*}) / |lambda(w->v)|^{p*}`;
/// c0: same with `p* = 1`.
pub fn unrooted_diagnostics(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    kind: SpaceKind,
    v: VertexId,
    n: u32,
) -> Result<(f64, f64)> {
    if tree.is_rooted() {
        return Err(Error::InvalidSpec("parent diagnostics need an unrooted tree".into()));
    }
    let agg = kind.aggregation()?;
    let engine = DiagEngine::new(tree, lambda, agg);
    let w = tree
        .ancestor(v, n)?
        .expect("unrooted ancestor present or error");
    let mut main = 0.0;
    let mut at_w = 0.0;
    if engine.valid_depth(v) < n {
        return Err(Error::FrontierHit(v));
    }
    if engine.valid_depth(w) < n {
        return Err(Error::FrontierHit(w));
    }
    engine.run(n, |step, values| {
        if step == n {
            main = values[v.index()];
            at_w = values[w.index()];
        }
    });
    let pp = path_product(lambda, tree, w, v)?.abs();
    let parent = match agg {
        Agg::Max => at_w.max(1.0) / pp,
        Agg::SumPow(q) => (1.0 + at_w) / powq(pp, q),
    };
    Ok((main, parent))
}

/// `Lambda_{v,n} = sum_{u in X^n(v)} |lambda(v->u)|`.
pub fn lambda_big(tree: &DirectedTree, lambda: &WeightFamily, v: VertexId, n: u32) -> Result<f64> {
    DiagEngine::new(tree, lambda, Agg::SumPow(PExp::ONE)).value_at(v, n)
}

// ---------------------------------------------------------------------------
// exact periodic analysis
// ---------------------------------------------------------------------------

/// Compare `prod(gamma_i) * prod(|lam_i|^q)` with 1 exactly; `q = None`
/// means the sup-aggregation case, where the gammas do not enter.
fn periodic_factor_cmp(pairs: &[(u32, f64)], q: Option<PExp>) -> Ordering {
    match q {
        None => {
            let mut p = BigRational::one();
            for &(_, l) in pairs {
                p *= rat_from_f64(l.abs());
            }
            p.cmp(&BigRational::one())
        }
        Some(q) => {
            // gamma^s * |lam|^r  vs 1   (cross-powered by s = q.den())
            let mut p = BigRational::one();
            for &(g, l) in pairs {
                p *= BigRational::from_integer(g.into()).pow(q.den() as i32);
                p *= rat_from_f64(l.abs()).pow(q.num() as i32);
            }
            p.cmp(&BigRational::one())
        }
    }
}

fn agg_q(agg: Agg) -> Option<PExp> {
    match agg {
        Agg::Max => None,
        Agg::SumPow(q) => Some(q),
    }
}

struct PeriodicView {
    /// (outdegree at g, weight at g+1) over one full right-side cycle
    right_pairs: Vec<(u32, f64)>,
    /// same on the left side; `None` for rooted trees
    left_pairs: Option<Vec<(u32, f64)>>,
}

/// Extract aligned periodic cycles from a declarative rule and a symbolic
/// weight family. `None` when either side is not eventually periodic.
fn periodic_view(tree: &DirectedTree, lambda: &WeightFamily) -> Option<PeriodicView> {
    let (g_right, g_left, g_tab): (Vec<u32>, Vec<u32>, usize) = match tree.rule()? {
        ExtensionRule::Constant(n) => (vec![*n], vec![*n], 1),
        ExtensionRule::Symmetric(p) => {
            let (rp, rc) = p.right_cycle()?;
            let (lp, lc) = p.left_cycle()?;
            let tab = (rp.len() + rc.len()).max(lp.len() + lc.len()).max(p.right.len()).max(p.left.len());
            (rc, lc, tab)
        }
        _ => return None,
    };
    let (l_right, l_left, l_tab): (Vec<f64>, Vec<f64>, usize) = match lambda {
        WeightFamily::Constant(c) => (vec![*c], vec![*c], 1),
        WeightFamily::Symmetric(p) => {
            let (rp, rc) = p.right_cycle()?;
            let (lp, lc) = p.left_cycle()?;
            let tab = (rp.len() + rc.len()).max(lp.len() + lc.len()).max(p.right.len()).max(p.left.len());
            (rc, lc, tab)
        }
        _ => return None,
    };
    let start = (g_tab.max(l_tab) + 4) as i64;
    let gamma_at = |g: i64| -> u32 {
        match tree.rule().unwrap() {
            ExtensionRule::Constant(n) => *n,
            ExtensionRule::Symmetric(p) => p.outdegree(g).unwrap_or(1),
            _ => 1,
        }
    };
    let lam_at = |g: i64| -> f64 {
        match lambda {
            WeightFamily::Constant(c) => *c,
            WeightFamily::Symmetric(p) => p.value(g).unwrap_or(1.0),
            _ => 1.0,
        }
    };
    let right_len = lcm(g_right.len(), l_right.len());
    let right_pairs: Vec<(u32, f64)> = (start..start + right_len as i64)
        .map(|g| (gamma_at(g), lam_at(g + 1)))
        .collect();
    let left_pairs = if tree.is_rooted() {
        None
    } else {
        let left_len = lcm(g_left.len(), l_left.len());
        Some(
            (-start - left_len as i64..-start)
                .map(|g| (gamma_at(g), lam_at(g + 1)))
                .collect(),
        )
    };
    Some(PeriodicView { right_pairs, left_pairs })
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(mut a: usize, mut b: usize) -> usize {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    if a == 0 || b == 0 {
        1
    } else {
        a / gcd(a, b) * b
    }
}

/// Decide HC/mixing exactly for eventually periodic symmetric data. In this
/// class the product diagnostics grow or stay bounded uniformly, so
/// hypercyclicity and mixing coincide and subsequence/full-sequence
/// divergence agree.
fn certify_periodic(view: &PeriodicView, agg: Agg, property: Property) -> Verdict {
    let q = agg_q(agg);
    let right_ok = periodic_factor_cmp(&view.right_pairs, q) == Ordering::Greater;
    let (left_ok, left_desc) = match &view.left_pairs {
        None => (true, None),
        Some(pairs) => {
            let ok = match q {
                // l1: left weight products must tend to zero
                None => periodic_factor_cmp(pairs, None) == Ordering::Less,
                Some(qq) => {
                    // gamma products diverge, or weight^q products vanish
                    let gammas_grow = pairs.iter().any(|&(g, _)| g > 1);
                    let lam_only: Vec<(u32, f64)> = pairs.iter().map(|&(_, l)| (1, l)).collect();
                    let lam_vanish = periodic_factor_cmp(&lam_only, Some(qq)) == Ordering::Less;
                    gammas_grow || lam_vanish
                }
            };
            (ok, Some(ok))
        }
    };
    let proven = right_ok && left_ok;
    let mut q_map = BTreeMap::new();
    q_map.insert("right_cycle_factor_gt_one".into(), if right_ok { 1.0 } else { 0.0 });
    if let Some(l) = left_desc {
        q_map.insert("left_condition".into(), if l { 1.0 } else { 0.0 });
    }
    Verdict::exact(
        property,
        if proven { Status::Proven } else { Status::Refuted },
        "symmetric-period-product",
        Evidence::ClosedForm { quantities: q_map },
    )
}

/// Exact peak/dip analysis on alternating-stretch trees with a constant
/// weight. With per-step factors `d = low * |lam|^{p*}` (low runs) and
/// `g = high * |lam|^{p*}` (high runs) and stretch bases `a, b`:
/// the running product has sup = infinity iff `d^a g^b > 1` or
/// `d^{2a} g^b > 1`, and tends to infinity iff both hold.
fn certify_alternating(
    profile: &crate::tree::AlternatingProfile,
    lam: f64,
    agg: Agg,
    rooted: bool,
    property: Property,
) -> Verdict {
    let q = agg_q(agg);
    let a = profile.low_base as usize;
    let b = profile.high_base as usize;
    let mut peak: Vec<(u32, f64)> = Vec::new();
    peak.extend(std::iter::repeat_n((profile.low, lam), a));
    peak.extend(std::iter::repeat_n((profile.high, lam), b));
    let mut dip = peak.clone();
    dip.extend(std::iter::repeat_n((profile.low, lam), a));
    let peaks_diverge = periodic_factor_cmp(&peak, q) == Ordering::Greater;
    let dips_diverge = periodic_factor_cmp(&dip, q) == Ordering::Greater;
    // unrooted: the left side is a constant-low profile
    let left_ok = if rooted {
        true
    } else {
        match q {
            None => rat_from_f64(lam.abs()) < BigRational::one(),
            Some(qq) => {
                profile.low > 1
                    || periodic_factor_cmp(&[(1, lam)], Some(qq)) == Ordering::Less
            }
        }
    };
    let ok = match property {
        Property::Hypercyclic => (peaks_diverge || dips_diverge) && left_ok,
        Property::Mixing => peaks_diverge && dips_diverge && left_ok,
    };
    let mut qs = BTreeMap::new();
    qs.insert("peaks_diverge".into(), if peaks_diverge { 1.0 } else { 0.0 });
    qs.insert("dips_diverge".into(), if dips_diverge { 1.0 } else { 0.0 });
    Verdict::exact(
        property,
        if ok { Status::Proven } else { Status::Refuted },
        "alternating-stretch-product",
        Evidence::ClosedForm { quantities: qs },
    )
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

/// Certify hypercyclicity (= weak mixing) or mixing of the weighted backward
/// shift `B_lambda` on the given space.
pub fn certify(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    property: Property,
    policy: &CertifyPolicy,
) -> Result<Verdict> {
    let agg = space.kind.aggregation()?;

    // move any nonconstant space weight onto the operator
    let (lambda, kind) = normalize(tree, lambda, space);
    let lambda = &lambda;

    // structural gate: a leaf kills every backward orbit coordinate
    if let Some(leaf) = tree.first_leaf() {
        return Ok(Verdict::exact(
            property,
            Status::Refuted,
            "leaf-obstruction",
            Evidence::Leaf { vertex: leaf.0 },
        ));
    }
    let report = tree.classify();

    // boundedness gate: an exactly unbounded operator is outside the
    // characterizations entirely
    let op = ShiftOperator::backward(lambda.clone(), SpaceSpec::unweighted(kind));
    let norm = op.operator_norm(tree);
    if norm.boundedness == Boundedness::Unbounded {
        return Err(Error::UnboundedOperator);
    }

    // exact family rules need an exactly leafless tree; they decide their
    // thresholds by rational cross-powering, so they run before the f64
    // norm gate (whose rounding could misplace an exact boundary)
    if report.leafless == Claim::Exact(true) {
        if let WeightFamily::MixingLineage { .. } = lambda {
            if let Some(checked) = audit_mixing_lineage(tree, lambda, agg) {
                return Ok(Verdict::exact(
                    property,
                    Status::Proven,
                    "eventually-two-branch",
                    Evidence::LineageAudit { vertices_checked: checked },
                ));
            }
        }
        if let WeightFamily::Dirichlet { q } = lambda {
            if tree.is_rooted() && kind == SpaceKind::Lp(PExp::TWO) {
                if *q > 1.0 {
                    // the squared branch sums grow like a power of n at
                    // every vertex
                    let mut qs = BTreeMap::new();
                    qs.insert("q".into(), *q);
                    return Ok(Verdict::exact(
                        property,
                        Status::Proven,
                        "dirichlet-growth",
                        Evidence::ClosedForm { quantities: qs },
                    ));
                }
                // q = 1: the norm is exactly 1
                return Ok(Verdict::exact(
                    property,
                    Status::Refuted,
                    "norm-contraction",
                    Evidence::NormContraction { norm: 1.0 },
                ));
            }
        }
        if let Some(c) = lambda.constant_value() {
            // rooted l1 needs no geometry at all
            if tree.is_rooted() && agg == Agg::Max {
                let ok = rat_from_f64(c.abs()) > BigRational::one();
                let mut qs = BTreeMap::new();
                qs.insert("abs_lambda".into(), c.abs());
                return Ok(Verdict::exact(
                    property,
                    if ok { Status::Proven } else { Status::Refuted },
                    "rolewicz-threshold",
                    Evidence::ClosedForm { quantities: qs },
                ));
            }
            // unrooted l1 refutes every constant family
            if !tree.is_rooted() && agg == Agg::Max {
                let mut qs = BTreeMap::new();
                qs.insert("abs_lambda".into(), c.abs());
                return Ok(Verdict::exact(
                    property,
                    Status::Refuted,
                    "rolewicz-unrooted-l1",
                    Evidence::ClosedForm { quantities: qs },
                ));
            }
            if let Some(ExtensionRule::Alternating(p)) = tree.rule() {
                return Ok(certify_alternating(p, c, agg, tree.is_rooted(), property));
            }
        }
        // symmetric weights on l1 need no tree symmetry: every branch from a
        // vertex carries the same product
        if agg == Agg::Max {
            if let WeightFamily::Symmetric(_) = lambda {
                if let Some(view) = periodic_view_l1(tree, lambda) {
                    return Ok(certify_periodic(&view, agg, property));
                }
            }
        }
        if let Some(view) = periodic_view(tree, lambda) {
            let mut v = certify_periodic(&view, agg, property);
            if lambda.constant_value().is_some() {
                v.rule = "rolewicz-threshold".into();
            }
            return Ok(v);
        }
    }

    // contraction gate for exactly-normed inputs no family rule covered
    if norm.boundedness == Boundedness::Bounded && norm.value <= 1.0 {
        return Ok(Verdict::exact(
            property,
            Status::Refuted,
            "norm-contraction",
            Evidence::NormContraction { norm: norm.value },
        ));
    }

    // empirical tier
    empirical_certify(tree, lambda, kind, agg, property, policy)
}

/// l1 periodic view that ignores tree geometry (gammas set to 1).
fn periodic_view_l1(tree: &DirectedTree, lambda: &WeightFamily) -> Option<PeriodicView> {
    let p = match lambda {
        WeightFamily::Symmetric(p) => p,
        _ => return None,
    };
    let (rp, rc) = p.right_cycle()?;
    let (lp, lc) = p.left_cycle()?;
    let start = (rp.len() + rc.len()).max(lp.len() + lc.len()).max(1) as i64 + 4;
    let right_pairs: Vec<(u32, f64)> = (start..start + rc.len() as i64)
        .map(|g| (1, p.value(g + 1).unwrap_or(1.0)))
        .collect();
    let left_pairs = if tree.is_rooted() {
        None
    } else {
        Some(
            (-start - lc.len() as i64..-start)
                .map(|g| (1, p.value(g + 1).unwrap_or(1.0)))
                .collect(),
        )
    };
    Some(PeriodicView { right_pairs, left_pairs })
}

/// Fold a nonconstant space weight into the shift weights:
/// `lambda~_v = lambda_v mu_v / mu_prt(v)` realizes the same operator on the
/// unweighted space.
fn normalize(tree: &DirectedTree, lambda: &WeightFamily, space: &SpaceSpec) -> (WeightFamily, SpaceKind) {
    if space.mu.constant_value().is_some() {
        return (lambda.clone(), space.kind);
    }
    let conj = lambda_from_mu(tree, &space.mu, Direction::Forward);
    let mut vals = vec![1.0f64; tree.vertex_count()];
    for v in tree.vertices() {
        if tree.parent_of(v).is_some() {
            vals[v.index()] = lambda.at(tree, v) * conj.at(tree, v);
        }
    }
    (WeightFamily::Dense(std::sync::Arc::new(vals)), space.kind)
}

/// Structural audit of the constructed mixing family over the materialized
/// horizon: every nonnegative-generation sibling set carries one weight-2
/// child within the 3-budget, every negative-generation sibling set stays
/// within budget 1/2.
fn audit_mixing_lineage(tree: &DirectedTree, lambda: &WeightFamily, agg: Agg) -> Option<usize> {
    let budget3 = agg.term(3.0) + 1e-9;
    let mut checked = 0usize;
    for v in tree.vertices() {
        if tree.is_frontier(v) || tree.child_count(v) == 0 {
            continue;
        }
        let mut acc = agg.zero();
        let mut has_two = false;
        for u in tree.children(v) {
            let w = lambda.at(tree, u);
            if w == 2.0 {
                has_two = true;
            }
            acc = agg.combine(acc, agg.term(w.abs()));
        }
        if tree.generation_index(v) >= 0 {
            if !has_two || acc > budget3 {
                return None;
            }
        } else if acc > 0.5 + 1e-9 {
            // the negative-side budget bounds the aggregated sum itself
            return None;
        }
        checked += 1;
    }
    Some(checked)
}

// ---------------------------------------------------------------------------
// empirical tier
// ---------------------------------------------------------------------------

struct EmpiricalData {
    samples: Vec<VertexId>,
    /// per sample: (n, main, parent) rows; parent = f64::NAN when rooted or
    /// beyond the left horizon
    series: Vec<Vec<(u32, f64, f64)>>,
}

fn gather_diagnostics(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    agg: Agg,
    policy: &CertifyPolicy,
) -> Result<(DirectedTree, EmpiricalData)> {
    // extend as far as the budget allows, one generation at a time
    let mut work = tree.clone();
    work.set_vertex_budget(policy.max_vertices);
    let target_right = tree.right_depth().saturating_add(0).max(policy.sample_gen + policy.horizon as i32);
    if work.rule().is_some() {
        while work.right_depth() < target_right {
            match work.extend_to_horizon(work.right_depth() + 1, work.left_depth()) {
                Ok(t) => work = t,
                Err(Error::VertexBudget { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        if !work.is_rooted() {
            let target_left = policy.left;
            while work.left_depth() < target_left {
                match work.extend_to_horizon(work.right_depth(), work.left_depth() + 1) {
                    Ok(t) => work = t,
                    Err(Error::VertexBudget { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let mut samples: Vec<VertexId> = work
        .vertices()
        .filter(|&v| {
            let g = work.generation_index(v);
            -policy.sample_gen <= g && g <= policy.sample_gen
        })
        .collect();
    samples.truncate(512);
    if samples.is_empty() {
        samples.push(work.anchor());
    }

    let engine = DiagEngine::new(&work, lambda, agg);
    let horizon = policy.horizon;
    let mut rows: Vec<Vec<(u32, f64, f64)>> = vec![Vec::new(); samples.len()];
    // ancestor chains and branch products for the parent quantity
    let mut chain: Vec<Option<VertexId>> = samples.iter().map(|&v| Some(v)).collect();
    let mut chain_prod: Vec<f64> = vec![1.0; samples.len()];
    let mut main_vals: Vec<Vec<f64>> = vec![Vec::new(); samples.len()];
    let mut parent_ready: Vec<Vec<(u32, f64, f64)>> = vec![Vec::new(); samples.len()];
    engine.run(horizon, |n, values| {
        if n == 0 {
            return;
        }
        for (i, &v) in samples.iter().enumerate() {
            if engine.valid_depth(v) >= n {
                main_vals[i].push(values[v.index()]);
            }
            if !work.is_rooted() {
                // advance the chain one step
                if let Some(prev) = chain[i] {
                    match work.parent_of(prev) {
                        Some(p) => {
                            chain_prod[i] *= lambda.at(&work, prev).abs();
                            chain[i] = Some(p);
                            if engine.valid_depth(p) >= n {
                                parent_ready[i].push((n, values[p.index()], chain_prod[i]));
                            }
                        }
                        None => chain[i] = None,
                    }
                }
            }
        }
    });
    for i in 0..samples.len() {
        let mut parent_map: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for &(n, at_w, pp) in &parent_ready[i] {
            parent_map.insert(n, (at_w, pp));
        }
        for (k, &m) in main_vals[i].iter().enumerate() {
            let n = k as u32 + 1;
            let parent = match parent_map.get(&n) {
                Some(&(at_w, pp)) => match agg {
                    Agg::Max => at_w.max(1.0) / pp,
                    Agg::SumPow(q) => (1.0 + at_w) / powq(pp, q),
                },
                None => f64::NAN,
            };
            rows[i].push((n, m, parent));
        }
    }
    Ok((
        work.clone(),
        EmpiricalData { samples, series: rows },
    ))
}

fn empirical_certify(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    kind: SpaceKind,
    agg: Agg,
    property: Property,
    policy: &CertifyPolicy,
) -> Result<Verdict> {
    let (work, data) = gather_diagnostics(tree, lambda, agg, policy)?;
    let unrooted = !work.is_rooted();

    // the common window across samples
    let h_min = data
        .series
        .iter()
        .map(|rows| rows.len() as u32)
        .min()
        .unwrap_or(0);
    if h_min == 0 {
        return Ok(Verdict {
            property,
            status: Status::Undetermined { horizon: 0 },
            rule: "diagnostic-divergence".into(),
            evidence: Evidence::BelowThreshold {
                vertex: data.samples[0].0,
                best: 0.0,
                threshold: policy.threshold,
            },
            diagnostics: build_series(&data, kind, work.anchor(), unrooted),
        });
    }

    let passes = |main: f64, parent: f64| -> bool {
        main > policy.threshold && (!unrooted || parent.is_nan() || parent > policy.threshold)
    };

    let status = match property {
        Property::Hypercyclic => {
            // intersection of super-threshold index sets
            let mut common: Vec<u32> = (1..=h_min).collect();
            for rows in &data.series {
                common.retain(|&n| {
                    let (_, m, p) = rows[(n - 1) as usize];
                    passes(m, p)
                });
            }
            if common.is_empty() {
                None
            } else {
                Some(common)
            }
        }
        Property::Mixing => {
            // the whole last quarter of the window must pass everywhere
            let from = (3 * h_min) / 4 + 1;
            let window: Vec<u32> = (from..=h_min).collect();
            let ok = data.series.iter().all(|rows| {
                window.iter().all(|&n| {
                    let (_, m, p) = rows[(n - 1) as usize];
                    passes(m, p)
                })
            });
            if ok && !window.is_empty() {
                Some(window)
            } else {
                None
            }
        }
    };

    let verdict = match status {
        Some(indices) => Verdict {
            property,
            status: Status::Supported { horizon: h_min },
            rule: "diagnostic-divergence".into(),
            evidence: Evidence::CommonDivergence {
                vertices: data.samples.iter().map(|v| v.0).collect(),
                indices: indices.into_iter().take(16).collect(),
            },
            diagnostics: build_series(&data, kind, work.anchor(), unrooted),
        },
        None => {
            // report the binding vertex: smallest best-value series
            let mut worst = (data.samples[0], f64::INFINITY);
            for (i, rows) in data.series.iter().enumerate() {
                let best = rows
                    .iter()
                    .map(|&(_, m, p)| if unrooted && !p.is_nan() { m.min(p) } else { m })
                    .fold(f64::NEG_INFINITY, f64::max);
                if best < worst.1 {
                    worst = (data.samples[i], best);
                }
            }
            Verdict {
                property,
                status: Status::Undetermined { horizon: h_min },
                rule: "diagnostic-divergence".into(),
                evidence: Evidence::BelowThreshold {
                    vertex: worst.0 .0,
                    best: worst.1,
                    threshold: policy.threshold,
                },
                diagnostics: build_series(&data, kind, work.anchor(), unrooted),
            }
        }
    };
    Ok(verdict)
}

fn build_series(
    data: &EmpiricalData,
    kind: SpaceKind,
    anchor: VertexId,
    unrooted: bool,
) -> Vec<DiagnosticSeries> {
    let mut out = Vec::new();
    let space = kind.to_string();
    for (i, &v) in data.samples.iter().enumerate().take(64) {
        let main_kind = if unrooted { SeriesKind::UnrootedMain } else { SeriesKind::RootedMain };
        out.push(DiagnosticSeries {
            vertex: v.0,
            kind: main_kind,
            values: data.series[i].iter().map(|&(n, m, _)| (n, m)).collect(),
            space: space.clone(),
            anchor: anchor.0,
        });
        if unrooted {
            let vals: Vec<(u32, f64)> = data.series[i]
                .iter()
                .filter(|&&(_, _, p)| !p.is_nan())
                .map(|&(n, _, p)| (n, p))
                .collect();
            if !vals.is_empty() {
                out.push(DiagnosticSeries {
                    vertex: v.0,
                    kind: SeriesKind::UnrootedParent,
                    values: vals,
                    space: space.clone(),
                    anchor: anchor.0,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// family certifiers (public entry points)
// ---------------------------------------------------------------------------

/// Certify the Rolewicz operator `lambda B`. Errors unless the weight family
/// is constant.
pub fn certify_rolewicz(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    property: Property,
    policy: &CertifyPolicy,
) -> Result<Verdict> {
    if lambda.constant_value().is_none() {
        return Err(Error::NotConstantWeight);
    }
    certify(tree, lambda, space, property, policy)
}

/// Certify a symmetric weight on a symmetric tree. Errors unless both are
/// symmetric (constant counts as symmetric).
pub fn certify_symmetric(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    property: Property,
    policy: &CertifyPolicy,
) -> Result<Verdict> {
    let tree_sym = matches!(
        tree.rule(),
        Some(ExtensionRule::Constant(_)) | Some(ExtensionRule::Symmetric(_))
    );
    let lam_sym = matches!(
        lambda,
        WeightFamily::Constant(_) | WeightFamily::Symmetric(_)
    );
    if !tree_sym || !lam_sym {
        return Err(Error::NotSymmetric);
    }
    certify(tree, lambda, space, property, policy)
}

/// Certify the weighted forward shift: rooted trees and branching vertices
/// are structural obstructions; the only surviving geometry is the
/// branchless unrooted tree, handled by orientation reversal.
pub fn certify_forward(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    property: Property,
    policy: &CertifyPolicy,
) -> Result<Verdict> {
    space.kind.aggregation()?;
    if tree.is_rooted() {
        return Ok(Verdict::exact(
            property,
            Status::Refuted,
            "root-forward-obstruction",
            Evidence::RootObstruction,
        ));
    }
    // any branching vertex forces equal orbit coordinates at its children
    for v in tree.vertices() {
        if tree.child_count(v) >= 2 {
            let c1 = tree.child_at(v, 0);
            let c2 = tree.child_at(v, 1);
            return Ok(Verdict::exact(
                property,
                Status::Refuted,
                "branching-forward-obstruction",
                Evidence::EqualCoordinates { first: c1.0, second: c2.0 },
            ));
        }
    }
    let report = tree.classify();
    if !report.branchless_z {
        return Err(Error::InvalidSpec(
            "forward certification needs a branchless or branching-decided tree".into(),
        ));
    }
    // S_lambda on Z is the backward shift on the reversed path, with each
    // weight moved to the old parent
    let (rev, map) = tree.reversed_path()?;
    let mut vals = vec![1.0f64; rev.vertex_count()];
    for v in tree.vertices() {
        if let Some(child) = tree.children(v).next() {
            vals[map[v.index()].index()] = lambda.at(tree, child);
        }
    }
    let rev_lambda = dense_or_constant(vals);
    let inner = certify(&rev, &rev_lambda, &SpaceSpec::unweighted(space.kind), property, policy)?;
    Ok(Verdict {
        property,
        status: inner.status,
        rule: "orientation-reversal".into(),
        evidence: Evidence::OrientationReversal { inner_rule: inner.rule },
        diagnostics: inner.diagnostics,
    })
}

fn dense_or_constant(vals: Vec<f64>) -> WeightFamily {
    let first = vals[0];
    if vals.iter().all(|&x| x == first) {
        WeightFamily::Constant(first)
    } else {
        WeightFamily::Dense(std::sync::Arc::new(vals))
    }
}

// ---------------------------------------------------------------------------
// sufficiency report
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    DivergesUp,
    DecaysToZero,
    Inconclusive,
}

pub(crate) fn trend_of(values: &[f64]) -> Trend {
    if values.len() < 4 {
        return Trend::Inconclusive;
    }
    let first = values[0];
    let last = *values.last().unwrap();
    let half = values.len() / 2;
    let tail = &values[half..];
    let nondecreasing = tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    if nondecreasing && last > 4.0 * first && last > 1.0 {
        Trend::DivergesUp
    } else if nonincreasing && last < first / 4.0 && last < 0.5 {
        Trend::DecaysToZero
    } else {
        Trend::Inconclusive
    }
}

/// Per-vertex one-sided conditions layered over `certify`.
#[derive(Clone, Debug, Serialize)]
pub struct SufficiencyRow {
    pub vertex: u32,
    /// `Lambda_{v,n}`
    pub lambda_sum: Vec<(u32, f64)>,
    /// `Lambda_{v,n} / |X^n(v)|^{1/p}`
    pub normalized: Vec<(u32, f64)>,
    /// l^p: `|X^n(v)|^{-p} sum 1/|lambda(v->u)|^p`; c0: `|X^n(v)| inf |lambda(v->u)|`
    pub moment: Vec<(u32, f64)>,
    /// unrooted only: `|lambda(prt^n(v) -> v)|`
    pub parent_product: Option<Vec<(u32, f64)>>,
    pub necessary_fires: bool,
    pub normalized_fires: bool,
    pub moment_fires: bool,
    pub parent_fires: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SufficiencyReport {
    pub space: String,
    pub horizon: u32,
    pub rows: Vec<SufficiencyRow>,
}

/// Evaluate the necessary Lambda condition and the sufficient one-sided
/// conditions per sampled vertex.
pub fn sufficient_report(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    kind: SpaceKind,
    policy: &CertifyPolicy,
) -> Result<SufficiencyReport> {
    let p = match kind {
        SpaceKind::Lp(p) => Some(p),
        SpaceKind::C0 => None,
        SpaceKind::LInf => {
            return Err(Error::InvalidSpec("sufficiency report needs lp or c0".into()))
        }
    };
    let mut work = tree.clone();
    work.set_vertex_budget(policy.max_vertices);
    if work.rule().is_some() {
        let target = policy.sample_gen + policy.horizon as i32;
        while work.right_depth() < target {
            match work.extend_to_horizon(work.right_depth() + 1, work.left_depth()) {
                Ok(t) => work = t,
                Err(Error::VertexBudget { .. }) => break,
                Err(e) => return Err(e),
            }
        }
    }
    let tree = &work;

    let mut samples: Vec<VertexId> = tree
        .vertices()
        .filter(|&v| {
            let g = tree.generation_index(v);
            -policy.sample_gen <= g && g <= policy.sample_gen
        })
        .collect();
    samples.truncate(64);

    // engines: plain sums, counts, inverse moments / minimum products
    let sum_engine = DiagEngine::new(tree, lambda, Agg::SumPow(PExp::ONE));
    let count_engine = DiagEngine::with_edge(
        tree,
        Agg::SumPow(PExp::ONE),
        vec![1.0; tree.vertex_count()],
    );
    let moment_engine = match p {
        Some(p) => {
            // edge factor 1/|lambda|^p, summed
            let edge = tree
                .vertices()
                .map(|v| {
                    if tree.parent_of(v).is_some() {
                        powq(lambda.at(tree, v).abs(), p).recip()
                    } else {
                        1.0
                    }
                })
                .collect();
            DiagEngine::with_edge(tree, Agg::SumPow(PExp::ONE), edge)
        }
        None => {
            // c0: minimum branch product, realized as a max-engine on
            // reciprocals
            let edge = tree
                .vertices()
                .map(|v| {
                    if tree.parent_of(v).is_some() {
                        lambda.at(tree, v).abs().recip()
                    } else {
                        1.0
                    }
                })
                .collect();
            DiagEngine::with_edge(tree, Agg::Max, edge)
        }
    };

    let horizon = policy.horizon;
    let record = |engine: &DiagEngine, v: VertexId| -> Vec<f64> {
        let depth = engine.valid_depth(v).min(horizon);
        let mut vals = Vec::new();
        engine.run(depth, |n, values| {
            if n >= 1 {
                vals.push(values[v.index()]);
            }
        });
        vals
    };

    let mut rows = Vec::new();
    for &v in &samples {
        let sums = record(&sum_engine, v);
        let counts = record(&count_engine, v);
        let moments_raw = record(&moment_engine, v);
        let n_avail = sums.len().min(counts.len()).min(moments_raw.len());
        let lambda_sum: Vec<(u32, f64)> = (0..n_avail).map(|k| (k as u32 + 1, sums[k])).collect();
        let normalized: Vec<(u32, f64)> = (0..n_avail)
            .map(|k| {
                let denom = match p {
                    Some(p) => counts[k].powf(1.0 / p.value()),
                    None => 1.0,
                };
                (k as u32 + 1, sums[k] / denom)
            })
            .collect();
        let moment: Vec<(u32, f64)> = (0..n_avail)
            .map(|k| match p {
                Some(p) => (
                    k as u32 + 1,
                    moments_raw[k] / powq(counts[k], p),
                ),
                // c0: count * inf |lambda(v->u)| = count / max reciprocal
                None => (k as u32 + 1, counts[k] / moments_raw[k]),
            })
            .collect();
        let parent_product = if tree.is_rooted() {
            None
        } else {
            let mut vals = Vec::new();
            let mut prod = 1.0f64;
            let mut cur = v;
            let mut n = 0u32;
            while n < horizon {
                match tree.parent_of(cur) {
                    Some(pv) => {
                        prod *= lambda.at(tree, cur).abs();
                        cur = pv;
                        n += 1;
                        vals.push((n, prod));
                    }
                    None => break,
                }
            }
            Some(vals)
        };

        let series_of = |v: &[(u32, f64)]| -> Vec<f64> { v.iter().map(|&(_, x)| x).collect() };
        let necessary_fires = trend_of(&series_of(&lambda_sum)) == Trend::DivergesUp;
        let normalized_fires = trend_of(&series_of(&normalized)) == Trend::DivergesUp;
        let moment_fires = match p {
            Some(_) => trend_of(&series_of(&moment)) == Trend::DecaysToZero,
            None => trend_of(&series_of(&moment)) == Trend::DivergesUp,
        };
        let parent_fires = parent_product
            .as_ref()
            .map(|vals| trend_of(&series_of(vals)) == Trend::DecaysToZero);

        rows.push(SufficiencyRow {
            vertex: v.0,
            lambda_sum,
            normalized,
            moment,
            parent_product,
            necessary_fires,
            normalized_fires,
            moment_fires,
            parent_fires,
        });
    }
    Ok(SufficiencyReport {
        space: kind.to_string(),
        horizon,
        rows,
    })
}
