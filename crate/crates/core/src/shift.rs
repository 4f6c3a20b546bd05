//! Weighted forward and backward shifts: application to finite-support
//! vectors, exact operator norms, the adjoint identity, and the conjugacy
//! between weighted shifts on unweighted spaces and unweighted shifts on
//! weighted spaces.

use crate::error::{Error, Result};
use crate::spaces::{pairing, powq, DualExp, FinVector, PExp, SpaceKind, SpaceSpec};
use crate::tree::{DirectedTree, ExtensionRule, Tail, VertexId};
use crate::weights::{WeightFamily, WeightProfile};
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// A weighted shift on a (possibly weighted) sequence space of the tree.
#[derive(Clone, Debug)]
pub struct ShiftOperator {
    pub direction: Direction,
    pub lambda: WeightFamily,
    pub space: SpaceSpec,
}

impl ShiftOperator {
    pub fn forward(lambda: WeightFamily, space: SpaceSpec) -> ShiftOperator {
        ShiftOperator { direction: Direction::Forward, lambda, space }
    }

    pub fn backward(lambda: WeightFamily, space: SpaceSpec) -> ShiftOperator {
        ShiftOperator { direction: Direction::Backward, lambda, space }
    }

    pub fn apply(&self, tree: &DirectedTree, f: &FinVector) -> Result<FinVector> {
        match self.direction {
            Direction::Forward => apply_forward(tree, &self.lambda, f),
            Direction::Backward => apply_backward(tree, &self.lambda, f),
        }
    }

    pub fn apply_pow(&self, tree: &DirectedTree, f: &FinVector, n: u32) -> Result<FinVector> {
        let mut cur = f.clone();
        for _ in 0..n {
            cur = self.apply(tree, &cur)?;
        }
        Ok(cur)
    }

    /// Evaluate the matching norm formula. Exact (`Bounded`/`Unbounded`) when
    /// the tree rule and both weight families are symbolic, or when the tree
    /// is explicit and complete; otherwise a lower bound tagged with the
    /// horizon it was computed at.
    pub fn operator_norm(&self, tree: &DirectedTree) -> NormReport {
        let (sup, arg) = materialized_sup(tree, &self.lambda, &self.space, self.direction);
        if let Some(outcome) = symbolic_norm(tree, &self.lambda, &self.space, self.direction) {
            return match outcome {
                SymbolicNorm::Bounded(value) => NormReport {
                    boundedness: Boundedness::Bounded,
                    value,
                    arg_sup: arg,
                    horizon: tree.right_depth(),
                },
                SymbolicNorm::Unbounded => NormReport {
                    boundedness: Boundedness::Unbounded,
                    value: f64::INFINITY,
                    arg_sup: arg,
                    horizon: tree.right_depth(),
                },
            };
        }
        if tree.rule().is_none() {
            // the whole operator is materialized
            return NormReport {
                boundedness: Boundedness::Bounded,
                value: sup,
                arg_sup: arg,
                horizon: tree.right_depth(),
            };
        }
        NormReport {
            boundedness: Boundedness::UnknownAtHorizon,
            value: sup,
            arg_sup: arg,
            horizon: tree.right_depth(),
        }
    }
}

/// `(S_lambda f)(u) = lambda_u f(prt(u))`; equivalently
/// `S_lambda e_v = sum_{u in X(v)} lambda_u e_u`.
pub fn apply_forward(tree: &DirectedTree, lambda: &WeightFamily, f: &FinVector) -> Result<FinVector> {
    let mut out = FinVector::new();
    for (v, c) in f.iter() {
        if tree.is_frontier(v) {
            return Err(Error::FrontierHit(v));
        }
        for u in tree.children(v) {
            out.add_at(u, lambda.at(tree, u) * c);
        }
    }
    Ok(out)
}

/// `B_lambda e_u = lambda_u e_{prt(u)}`; the root coefficient of a rooted
/// tree is dropped, support on the truncation top of an unrooted tree is an
/// error because the parent exists but is not materialized.
pub fn apply_backward(tree: &DirectedTree, lambda: &WeightFamily, f: &FinVector) -> Result<FinVector> {
    let mut out = FinVector::new();
    for (u, c) in f.iter() {
        match tree.parent_of(u) {
            Some(p) => out.add_at(p, lambda.at(tree, u) * c),
            None => {
                if !tree.is_rooted() {
                    return Err(Error::TruncationExceeded { needed: 1, available: 0 });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    Bounded,
    Unbounded,
    UnknownAtHorizon,
}

/// Outcome of a norm-formula evaluation. Under `UnknownAtHorizon` the value
/// is a certified lower bound for the true norm.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub boundedness: Boundedness,
    pub value: f64,
    pub arg_sup: Option<VertexId>,
    pub horizon: i32,
}

impl NormReport {
    pub fn is_exact(&self) -> bool {
        self.boundedness != Boundedness::UnknownAtHorizon
    }
}

/// Sup of the per-vertex (or per-edge) norm quantity over the materialized
/// truncation, with the smallest vertex attaining it.
fn materialized_sup(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    direction: Direction,
) -> (f64, Option<VertexId>) {
    let mu = &space.mu;
    let mut best = f64::NEG_INFINITY;
    let mut arg = None;
    let mut consider = |v: VertexId, val: f64| {
        if val > best {
            best = val;
            arg = Some(v);
        }
    };
    match (direction, space.kind) {
        (Direction::Backward, SpaceKind::Lp(p)) if p.is_one() => {
            for v in tree.vertices() {
                if let Some(parent) = tree.parent_of(v) {
                    let val =
                        (mu.at(tree, parent) * lambda.at(tree, v) / mu.at(tree, v)).abs();
                    consider(v, val);
                }
            }
        }
        (Direction::Backward, SpaceKind::Lp(p)) => {
            let q = match p.dual() {
                DualExp::Finite(q) => q,
                DualExp::Infinite => unreachable!(),
            };
            for v in tree.vertices() {
                if tree.is_frontier(v) {
                    continue;
                }
                let s: f64 = tree
                    .children(v)
                    .map(|u| powq((lambda.at(tree, u) / mu.at(tree, u)).abs(), q))
                    .sum();
                let val = mu.at(tree, v).abs() * s.powf(1.0 / q.value());
                consider(v, val);
            }
        }
        (Direction::Backward, SpaceKind::C0 | SpaceKind::LInf) => {
            for v in tree.vertices() {
                if tree.is_frontier(v) {
                    continue;
                }
                let s: f64 = tree
                    .children(v)
                    .map(|u| (lambda.at(tree, u) / mu.at(tree, u)).abs())
                    .sum();
                consider(v, mu.at(tree, v).abs() * s);
            }
        }
        (Direction::Forward, SpaceKind::Lp(p)) => {
            for v in tree.vertices() {
                if tree.is_frontier(v) {
                    continue;
                }
                let s: f64 = tree
                    .children(v)
                    .map(|u| powq((lambda.at(tree, u) * mu.at(tree, u)).abs(), p))
                    .sum();
                let val = s.powf(1.0 / p.value()) / mu.at(tree, v).abs();
                consider(v, val);
            }
        }
        (Direction::Forward, SpaceKind::C0 | SpaceKind::LInf) => {
            for v in tree.vertices() {
                if let Some(parent) = tree.parent_of(v) {
                    let val =
                        (lambda.at(tree, v) * mu.at(tree, v) / mu.at(tree, parent)).abs();
                    consider(v, val);
                }
            }
        }
    }
    if best == f64::NEG_INFINITY {
        (0.0, None)
    } else {
        (best, arg)
    }
}

enum SymbolicNorm {
    Bounded(f64),
    Unbounded,
}

/// Closed-form norm for symbolic (rule, weight) inputs with a constant space
/// weight; `None` means the inputs are not symbolic enough.
fn symbolic_norm(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    space: &SpaceSpec,
    direction: Direction,
) -> Option<SymbolicNorm> {
    // constant space weights cancel in all five formulas
    space.mu.constant_value()?;
    let rule = tree.rule()?;

    // Dirichlet family on l2, any rooted locally finite tree:
    // per-vertex value ((n_v+q)/(n_v+1))^{1/2}, sup at the root
    if let WeightFamily::Dirichlet { q } = lambda {
        if tree.is_rooted() && space.kind == SpaceKind::Lp(PExp::TWO) {
            return Some(SymbolicNorm::Bounded(q.sqrt()));
        }
        return None;
    }

    // gamma involvement per formula
    let uses_gamma = matches!(
        (direction, space.kind),
        (Direction::Backward, SpaceKind::Lp(p)) if !p.is_one()
    ) || matches!((direction, space.kind), (Direction::Backward, SpaceKind::C0 | SpaceKind::LInf))
        || matches!((direction, space.kind), (Direction::Forward, SpaceKind::Lp(_)));

    let gamma = GammaView::of(rule)?;
    let lam = LamView::of(lambda)?;
    if let (GammaView::Alternating(_), LamView::Profile(_)) = (&gamma, &lam) {
        return None;
    }

    if uses_gamma && gamma.unbounded() {
        // outdegrees grow without bound while |lambda| stays bounded below
        return Some(SymbolicNorm::Unbounded);
    }

    // probe a finite set of generations that covers every distinct
    // (gamma(g), lambda(g+1)) value the infinite tree realizes
    let probe = probe_range(tree, &gamma, &lam)?;
    let mut best = 0.0f64;
    for g in probe {
        let out = gamma.value(g)? as f64;
        let lam_child = lam.value(g + 1)?.abs();
        let lam_here = lam.value(g)?.abs();
        let val = match (direction, space.kind) {
            (Direction::Backward, SpaceKind::Lp(p)) if p.is_one() => lam_here,
            (Direction::Backward, SpaceKind::Lp(p)) => {
                let q = match p.dual() {
                    DualExp::Finite(q) => q,
                    DualExp::Infinite => unreachable!(),
                };
                out.powf(1.0 / q.value()) * lam_child
            }
            (Direction::Backward, SpaceKind::C0 | SpaceKind::LInf) => out * lam_child,
            (Direction::Forward, SpaceKind::Lp(p)) => out.powf(1.0 / p.value()) * lam_child,
            (Direction::Forward, SpaceKind::C0 | SpaceKind::LInf) => lam_here,
        };
        best = best.max(val);
    }
    Some(SymbolicNorm::Bounded(best))
}

enum GammaView<'a> {
    Constant(u32),
    Profile(&'a crate::tree::OutdegreeProfile),
    Alternating(&'a crate::tree::AlternatingProfile),
}

impl<'a> GammaView<'a> {
    fn of(rule: &'a ExtensionRule) -> Option<GammaView<'a>> {
        match rule {
            ExtensionRule::Constant(n) => Some(GammaView::Constant(*n)),
            ExtensionRule::Symmetric(p) => Some(GammaView::Profile(p)),
            ExtensionRule::Alternating(p) => Some(GammaView::Alternating(p)),
            ExtensionRule::Procedural(_) => None,
        }
    }

    fn value(&self, g: i64) -> Option<u32> {
        match self {
            GammaView::Constant(n) => Some(*n),
            GammaView::Profile(p) => p.outdegree(g),
            GammaView::Alternating(p) => Some(p.outdegree(g)),
        }
    }

    fn unbounded(&self) -> bool {
        match self {
            GammaView::Constant(_) | GammaView::Alternating(_) => false,
            GammaView::Profile(p) => {
                matches!(p.right_tail, Tail::Geometric(f) if f >= 2)
                    || matches!(p.left_tail, Tail::Geometric(f) if f >= 2)
            }
        }
    }

    fn table_len(&self) -> (usize, usize) {
        match self {
            GammaView::Constant(_) => (1, 1),
            GammaView::Profile(p) => (p.right.len().max(1), p.left.len().max(1)),
            GammaView::Alternating(_) => (1, 1),
        }
    }

    fn cycle_len(&self) -> Option<(usize, usize)> {
        match self {
            GammaView::Constant(_) => Some((1, 1)),
            GammaView::Profile(p) => {
                let r = p.right_cycle()?.1.len();
                let l = p.left_cycle()?.1.len();
                Some((r, l))
            }
            // stretch lengths double forever: the value set is {low, high}
            // but there is no eventual period; callers treat this case via
            // the two-value product set below
            GammaView::Alternating(_) => None,
        }
    }
}

enum LamView<'a> {
    Constant(f64),
    Profile(&'a WeightProfile),
}

impl<'a> LamView<'a> {
    fn of(lambda: &'a WeightFamily) -> Option<LamView<'a>> {
        match lambda {
            WeightFamily::Constant(c) => Some(LamView::Constant(*c)),
            WeightFamily::Symmetric(p) => Some(LamView::Profile(p)),
            _ => None,
        }
    }

    fn value(&self, g: i64) -> Option<f64> {
        match self {
            LamView::Constant(c) => Some(*c),
            LamView::Profile(p) => p.value(g),
        }
    }

    fn table_len(&self) -> (usize, usize) {
        match self {
            LamView::Constant(_) => (1, 1),
            LamView::Profile(p) => (p.right.len().max(1), p.left.len().max(1)),
        }
    }

    fn cycle_len(&self) -> Option<(usize, usize)> {
        match self {
            LamView::Constant(_) => Some((1, 1)),
            LamView::Profile(p) => {
                let r = p.right_cycle()?.1.len();
                let l = p.left_cycle()?.1.len();
                Some((r, l))
            }
        }
    }
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
    a / gcd(a, b) * b
}

/// Generations whose (outdegree, weight) values cover everything the
/// infinite tree realizes.
fn probe_range(tree: &DirectedTree, gamma: &GammaView, lam: &LamView) -> Option<Vec<i64>> {
    match gamma.cycle_len() {
        Some((gr, gl)) => {
            let (lr, ll) = lam.cycle_len()?;
            let (gtr, gtl) = gamma.table_len();
            let (ltr, ltl) = lam.table_len();
            let right_to = (gtr.max(ltr) + lcm(gr, lr)) as i64 + 1;
            let mut gens: Vec<i64> = (0..=right_to).collect();
            if !tree.is_rooted() {
                let left_to = (gtl.max(ltl) + lcm(gl, ll)) as i64 + 1;
                gens.extend(-left_to..0);
            }
            Some(gens)
        }
        None => {
            // alternating rule with a constant weight: both stretch values
            // recur forever, so probing one low and one high generation of
            // each parity suffices
            if let (GammaView::Alternating(p), LamView::Constant(_)) = (gamma, lam) {
                let mut gens = vec![0i64];
                let mut g = 0i64;
                // find one generation of each outdegree
                loop {
                    if p.outdegree(g) != p.outdegree(0) {
                        gens.push(g);
                        break;
                    }
                    g += 1;
                }
                if !tree.is_rooted() {
                    gens.push(-1);
                }
                Some(gens)
            } else {
                None
            }
        }
    }
}

/// `|<S_lambda f, g> - <f, B_lambda g>|`, the adjoint identity residual.
/// Zero up to rounding for every pair of finite vectors.
pub fn adjoint_residual(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    f: &FinVector,
    g: &FinVector,
) -> Result<f64> {
    let sf = apply_forward(tree, lambda, f)?;
    let bg = apply_backward(tree, lambda, g)?;
    Ok((pairing(&sf, g) - pairing(f, &bg)).abs())
}

/// Space weights conjugating the weighted shift on the unweighted space to
/// the unweighted shift on the weighted space, normalized by the anchor
/// value. Computed over the whole materialized tree.
///
/// Backward linkage: `lambda_v = mu_prt(v) / mu_v`; forward linkage:
/// `lambda_v = mu_v / mu_prt(v)`.
pub fn mu_from_lambda(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    direction: Direction,
    mu_anchor: f64,
) -> WeightFamily {
    let n = tree.vertex_count();
    let mut mu = vec![f64::NAN; n];
    mu[tree.anchor().index()] = mu_anchor;
    // ancestors of the anchor
    let mut v = tree.anchor();
    while let Some(p) = tree.parent_of(v) {
        let lv = lambda.at(tree, v);
        mu[p.index()] = match direction {
            Direction::Backward => mu[v.index()] * lv,
            Direction::Forward => mu[v.index()] / lv,
        };
        v = p;
    }
    // everything below, parent before child
    let mut stack = vec![tree.top()];
    while let Some(v) = stack.pop() {
        for u in tree.children(v) {
            if mu[u.index()].is_nan() {
                let lu = lambda.at(tree, u);
                mu[u.index()] = match direction {
                    Direction::Backward => mu[v.index()] / lu,
                    Direction::Forward => mu[v.index()] * lu,
                };
            }
            stack.push(u);
        }
    }
    WeightFamily::Dense(Arc::new(mu))
}

/// Inverse of [`mu_from_lambda`]: read the shift weights off a space weight.
/// The parentless vertex gets the inert value 1 (no shift ever uses it).
pub fn lambda_from_mu(tree: &DirectedTree, mu: &WeightFamily, direction: Direction) -> WeightFamily {
    let n = tree.vertex_count();
    let mut lam = vec![1.0f64; n];
    for v in tree.vertices() {
        if let Some(p) = tree.parent_of(v) {
            let (a, b) = (mu.at(tree, p), mu.at(tree, v));
            lam[v.index()] = match direction {
                Direction::Backward => a / b,
                Direction::Forward => b / a,
            };
        }
    }
    WeightFamily::Dense(Arc::new(lam))
}

/// `|| phi_mu (B f) - B_lambda (phi_mu f) ||` in the unweighted target space,
/// where `phi_mu(f) = (mu_v f(v))_v`. Zero up to rounding whenever `lambda`
/// and `mu` are linked by [`lambda_from_mu`].
pub fn conjugacy_residual(
    tree: &DirectedTree,
    lambda: &WeightFamily,
    mu: &WeightFamily,
    kind: SpaceKind,
    f: &FinVector,
    direction: Direction,
) -> Result<f64> {
    let phi = |g: &FinVector| -> FinVector {
        FinVector::from_entries(g.iter().map(|(v, c)| (v, mu.at(tree, v) * c)))
    };
    let unweighted = WeightFamily::Constant(1.0);
    let lhs = match direction {
        Direction::Backward => phi(&apply_backward(tree, &unweighted, f)?),
        Direction::Forward => phi(&apply_forward(tree, &unweighted, f)?),
    };
    let rhs = match direction {
        Direction::Backward => apply_backward(tree, lambda, &phi(f))?,
        Direction::Forward => apply_forward(tree, lambda, &phi(f))?,
    };
    let target = SpaceSpec::unweighted(kind);
    Ok(target.norm(tree, &lhs.sub(&rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{ExtensionRule, OutdegreeProfile, TreeSpec};
    use crate::weights::path_product;

    fn binary(depth: i32) -> DirectedTree {
        DirectedTree::from_rule(true, ExtensionRule::Constant(2), depth, 0).unwrap()
    }

    fn l2() -> SpaceSpec {
        SpaceSpec::unweighted(SpaceKind::Lp(PExp::TWO))
    }

    #[test]
    fn forward_on_root() {
        let spec = TreeSpec {
            rooted: true,
            edges: Some(vec![(0, 1), (0, 2)]),
            rule: None,
            depth_right: None,
            depth_left: None,
        };
        let t = DirectedTree::build(&spec).unwrap();
        let lam = WeightFamily::Explicit(
            [(VertexId(0), 1.0), (VertexId(1), 2.0), (VertexId(2), 3.0)]
                .into_iter()
                .collect(),
        );
        let out = apply_forward(&t, &lam, &FinVector::unit(VertexId(0))).unwrap();
        assert_eq!(out.get(VertexId(1)), 2.0);
        assert_eq!(out.get(VertexId(2)), 3.0);
        // S of 0 is 0
        assert!(apply_forward(&t, &lam, &FinVector::new()).unwrap().is_zero());
    }

    #[test]
    fn classical_shift_on_z() {
        let z = DirectedTree::from_rule(false, ExtensionRule::Constant(1), 4, 1).unwrap();
        let lam = WeightFamily::Constant(1.0);
        let e0 = FinVector::unit(VertexId(0));
        let se0 = apply_forward(&z, &lam, &e0).unwrap();
        let child = z.children(VertexId(0)).next().unwrap();
        assert_eq!(se0, FinVector::unit(child));
    }

    #[test]
    fn backward_sums_children() {
        let spec = TreeSpec {
            rooted: true,
            edges: Some(vec![(0, 1), (0, 2)]),
            rule: None,
            depth_right: None,
            depth_left: None,
        };
        let t = DirectedTree::build(&spec).unwrap();
        let lam = WeightFamily::Explicit(
            [(VertexId(0), 1.0), (VertexId(1), 2.0), (VertexId(2), 3.0)]
                .into_iter()
                .collect(),
        );
        let f = FinVector::from_entries([(VertexId(1), 1.0), (VertexId(2), 1.0)]);
        let out = apply_backward(&t, &lam, &f).unwrap();
        assert_eq!(out, FinVector::from_entries([(VertexId(0), 5.0)]));
        // B e_root = 0 on rooted trees
        assert!(apply_backward(&t, &lam, &FinVector::unit(VertexId(0))).unwrap().is_zero());
    }

    #[test]
    fn backward_iterates_match_path_products() {
        let t = binary(6);
        let lam = WeightFamily::Procedural(Arc::new(|tree: &DirectedTree, v: VertexId| {
            // first child 0.4, second 0.7
            match tree.parent_of(v) {
                Some(p) if tree.child_at(p, 0) == v => 0.4,
                Some(_) => 0.7,
                None => 1.0,
            }
        }));
        let op = ShiftOperator::backward(lam.clone(), l2());
        let u = t.descendants(VertexId(0), 4).unwrap()[7];
        let out = op.apply_pow(&t, &FinVector::unit(u), 4).unwrap();
        let expected = path_product(&lam, &t, VertexId(0), u).unwrap();
        assert_eq!(out.support_len(), 1);
        assert!((out.get(VertexId(0)) - expected).abs() < 1e-15);
    }

    #[test]
    fn rolewicz_norm_binary_l2() {
        let t = binary(4);
        let op = ShiftOperator::backward(WeightFamily::Constant(1.0), l2());
        let report = op.operator_norm(&t);
        assert_eq!(report.boundedness, Boundedness::Bounded);
        assert!((report.value - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn geometric_outdegree_unbounded_on_c0() {
        let profile = OutdegreeProfile {
            right: vec![1],
            right_tail: Tail::Geometric(2),
            left: vec![],
            left_tail: Tail::Hold,
        };
        let t = DirectedTree::from_rule(true, ExtensionRule::Symmetric(profile), 4, 0).unwrap();
        let op = ShiftOperator::backward(
            WeightFamily::Constant(1.0),
            SpaceSpec::unweighted(SpaceKind::C0),
        );
        let report = op.operator_norm(&t);
        assert_eq!(report.boundedness, Boundedness::Unbounded);
        assert!(report.value.is_infinite());
    }

    #[test]
    fn dirichlet_norm_is_sqrt_q() {
        let t = binary(5);
        for q in [1.0, 2.0, 4.0] {
            let op = ShiftOperator::forward(WeightFamily::Dirichlet { q }, l2());
            let report = op.operator_norm(&t);
            assert_eq!(report.boundedness, Boundedness::Bounded);
            assert!((report.value - q.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_tree_norm_is_exact() {
        let spec = TreeSpec {
            rooted: true,
            edges: Some(vec![(0, 1), (0, 2), (1, 3)]),
            rule: None,
            depth_right: None,
            depth_left: None,
        };
        let t = DirectedTree::build(&spec).unwrap();
        let op = ShiftOperator::backward(WeightFamily::Constant(2.0), l2());
        let report = op.operator_norm(&t);
        assert_eq!(report.boundedness, Boundedness::Bounded);
        // root has two children: 2 * sqrt 2
        assert!((report.value - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(report.arg_sup, Some(VertexId(0)));
    }

    #[test]
    fn adjoint_identity_simple() {
        let t = binary(3);
        let lam = WeightFamily::Constant(1.5);
        let v = VertexId(1);
        let u = t.children(v).next().unwrap();
        let r = adjoint_residual(&t, &lam, &FinVector::unit(v), &FinVector::unit(u)).unwrap();
        assert_eq!(r, 0.0);
        // disjoint branches pair to zero on both sides
        let r2 = adjoint_residual(
            &t,
            &lam,
            &FinVector::unit(VertexId(1)),
            &FinVector::unit(VertexId(2)),
        )
        .unwrap();
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn chain_mu_from_constant_lambda() {
        // rooted chain with lambda = 2: mu at generation n is 2^{-n}
        let chain = DirectedTree::from_rule(true, ExtensionRule::Constant(1), 6, 0).unwrap();
        let mu = mu_from_lambda(&chain, &WeightFamily::Constant(2.0), Direction::Backward, 1.0);
        let mut v = VertexId(0);
        for n in 0..=6 {
            assert!((mu.at(&chain, v) - 0.5f64.powi(n)).abs() < 1e-15);
            if n < 6 {
                v = chain.children(v).next().unwrap();
            }
        }
    }

    #[test]
    fn lambda_mu_roundtrip() {
        let t = binary(4);
        let lam = WeightFamily::Procedural(Arc::new(|tree: &DirectedTree, v: VertexId| {
            match tree.parent_of(v) {
                Some(p) if tree.child_at(p, 0) == v => 0.5,
                Some(_) => 3.0,
                None => 1.0,
            }
        }));
        let mu = mu_from_lambda(&t, &lam, Direction::Backward, 1.0);
        let back = lambda_from_mu(&t, &mu, Direction::Backward);
        for v in t.vertices() {
            if t.parent_of(v).is_some() {
                assert!((back.at(&t, v) - lam.at(&t, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unimodular_scaling_same_moduli() {
        let t = binary(3);
        let lam = WeightFamily::Constant(0.8);
        let neg = WeightFamily::Constant(-0.8);
        let mu_a = mu_from_lambda(&t, &lam, Direction::Backward, 1.0);
        let mu_b = mu_from_lambda(&t, &neg, Direction::Backward, 1.0);
        for v in t.vertices() {
            assert!((mu_a.at(&t, v).abs() - mu_b.at(&t, v).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn conjugacy_commutes() {
        let t = binary(5);
        let lam = WeightFamily::Procedural(Arc::new(|tree: &DirectedTree, v: VertexId| {
            match tree.parent_of(v) {
                Some(p) if tree.child_at(p, 0) == v => 0.25,
                Some(_) => 4.0,
                None => 1.0,
            }
        }));
        for direction in [Direction::Backward, Direction::Forward] {
            let mu = mu_from_lambda(&t, &lam, direction, 1.0);
            let lam2 = lambda_from_mu(&t, &mu, direction);
            let f = FinVector::from_entries([
                (VertexId(3), 1.0),
                (VertexId(7), -2.0),
                (VertexId(12), 0.5),
            ]);
            let r = conjugacy_residual(&t, &lam2, &mu, SpaceKind::Lp(PExp::TWO), &f, direction)
                .unwrap();
            assert!(r < 1e-12, "residual {r} for {direction:?}");
        }
    }

    #[test]
    fn norm_bounds_applied_vectors() {
        let t = binary(6);
        let op = ShiftOperator::backward(WeightFamily::Constant(0.9), l2());
        let norm = op.operator_norm(&t).value;
        let f = FinVector::from_entries([
            (VertexId(0), 0.3),
            (VertexId(4), -1.2),
            (VertexId(9), 2.0),
            (VertexId(23), 0.7),
        ]);
        let bf = op.apply(&t, &f).unwrap();
        assert!(op.space.norm(&t, &bf) <= norm * op.space.norm(&t, &f) + 1e-12);
    }
}
