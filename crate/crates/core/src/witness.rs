//! Approximate-right-inverse witnesses: the maps sending a basis vector
//! `e_v` to a nonnegative unit-mass vector supported n generations below
//! (so that `B^n` maps it back to `e_v` exactly), and the unrooted
//! approximants `f_{v,n} = e_v + h_{v,n}` chosen by the two-branch
//! dichotomy. All constructions live on the weighted-space representation:
//! the unweighted shift `B` acting on `X_mu`.

use crate::error::{Error, Result};
use crate::extremal::{ExtremalMode, ExtremalProblem};
use crate::shift::{apply_backward, mu_from_lambda, Direction};
use crate::spaces::{powq, DualExp, FinVector, SpaceKind, SpaceSpec};
use crate::tree::{DirectedTree, VertexId};
use crate::weights::WeightFamily;
use serde::Serialize;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `f = e_v`: the parent weight alone is small enough
    Alpha,
    /// `f = e_v + h` with `h` a negated minimizer killing the image
    Beta,
}

/// One unrooted approximant with the proof-side guarantees it satisfies.
#[derive(Clone, Debug)]
pub struct WitnessBundle {
    pub v: VertexId,
    pub n: u32,
    /// the right-inverse witness `g_{v,n}` (support in `X^n(v)`, mass 1)
    pub r_vec: FinVector,
    /// the approximant `f_{v,n}` (unrooted trees only)
    pub i_vec: Option<FinVector>,
    pub branch: Option<Branch>,
    pub m_value: Option<f64>,
    /// both `||f - e_v||` and `||B^n f||` stay below this
    pub bound: Option<f64>,
}

/// `g_{v,n}`: the extremal minimizer over `X^n(v)` with the space weights,
/// nonnegative with unit coefficient mass, so `B^n g = e_v` exactly and
/// `||g||` equals the extremal infimum.
pub fn build_r_witness(
    tree: &DirectedTree,
    mu: &WeightFamily,
    kind: SpaceKind,
    v: VertexId,
    n: u32,
) -> Result<FinVector> {
    let mode = ExtremalMode::for_space(kind)?;
    let set = tree.descendants(v, n)?;
    let entries: Vec<(VertexId, f64)> = set.iter().map(|&u| (u, mu.at(tree, u))).collect();
    let problem = ExtremalProblem::new(entries, mode)?;
    Ok(problem.minimizer().vector)
}

/// The unrooted approximant `f_{v,n}` with the branch dichotomy: with
/// `w = prt^n(v)` and `M = 1/|mu_w|^{p*} + sum_{u in X^n(w)} 1/|mu_u|^{p*}`,
/// take `f = e_v` when `1/|mu_w|^{p*} >= M/2` (ties included), otherwise
/// subtract a minimizer over `X^n(w)` so that `B^n f = 0` exactly. On `l1`
/// the min/inf form of the condition replaces `M`.
pub fn build_i_witness(
    tree: &DirectedTree,
    mu: &WeightFamily,
    kind: SpaceKind,
    v: VertexId,
    n: u32,
) -> Result<WitnessBundle> {
    if tree.is_rooted() {
        return Err(Error::InvalidSpec("approximants are an unrooted construction".into()));
    }
    let w = tree.ancestor(v, n)?.expect("unrooted ancestor");
    let set = tree.descendants(w, n)?;
    let mode = ExtremalMode::for_space(kind)?;
    let r_vec = build_r_witness(tree, mu, kind, v, n)?;
    let mu_w = mu.at(tree, w).abs();

    let (branch, m_value, bound) = match kind {
        SpaceKind::Lp(p) if p.is_one() => {
            let inf_children = set
                .iter()
                .map(|&u| mu.at(tree, u).abs())
                .fold(f64::INFINITY, f64::min);
            let m = mu_w.min(inf_children);
            let branch = if mu_w <= inf_children { Branch::Alpha } else { Branch::Beta };
            (branch, m, m)
        }
        SpaceKind::Lp(p) => {
            let q = match p.dual() {
                DualExp::Finite(q) => q,
                DualExp::Infinite => unreachable!(),
            };
            let head = powq(mu_w, q).recip();
            let tail: f64 = set.iter().map(|&u| powq(mu.at(tree, u).abs(), q).recip()).sum();
            let m = head + tail;
            let branch = if head >= m / 2.0 { Branch::Alpha } else { Branch::Beta };
            (branch, m, (2.0 / m).powf(1.0 / q.value()))
        }
        SpaceKind::C0 => {
            let head = mu_w.recip();
            let tail: f64 = set.iter().map(|&u| mu.at(tree, u).abs().recip()).sum();
            let m = head + tail;
            let branch = if head >= m / 2.0 { Branch::Alpha } else { Branch::Beta };
            (branch, m, 2.0 / m)
        }
        SpaceKind::LInf => {
            return Err(Error::InvalidSpec("approximants undefined on linf".into()))
        }
    };

    let i_vec = match branch {
        Branch::Alpha => FinVector::unit(v),
        Branch::Beta => {
            let entries: Vec<(VertexId, f64)> =
                set.iter().map(|&u| (u, mu.at(tree, u))).collect();
            let h = ExtremalProblem::new(entries, mode)?.minimizer().vector;
            FinVector::unit(v).sub(&h)
        }
    };
    Ok(WitnessBundle {
        v,
        n,
        r_vec,
        i_vec: Some(i_vec),
        branch: Some(branch),
        m_value: Some(m_value),
        bound: Some(bound),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub vertex: u32,
    pub n: u32,
    /// `||B^n e_v||` in X_mu (0 once a rooted tree runs out of ancestors)
    pub shift_decay: f64,
    /// `||R_n e_v||` = the extremal infimum
    pub witness_norm: f64,
    /// `||B^n R_n e_v - e_v||`, identically zero
    pub right_inverse_residual: f64,
    /// unrooted: `||I_n e_v - e_v||`
    pub approximant_gap: Option<f64>,
    /// unrooted: `||B^n I_n e_v||`
    pub approximant_image: Option<f64>,
    pub branch: Option<Branch>,
    pub m_value: Option<f64>,
    pub bound: Option<f64>,
    /// both guarantee inequalities hold (within rounding)
    pub guarantees_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub space: String,
    pub rows: Vec<AuditRow>,
    /// per basis vertex: the witness norms decay monotonically toward zero
    pub decay: Vec<(u32, bool)>,
}

/// Which representation the caller's weights are in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Representation {
    /// weights on the space; the shift is unweighted
    Mu,
    /// weights on the operator; conjugated to the space first
    Lambda,
}

/// Tabulate the criterion quantities for the given basis vertices and powers.
pub fn criterion_audit(
    tree: &DirectedTree,
    weights: &WeightFamily,
    representation: Representation,
    kind: SpaceKind,
    basis: &[VertexId],
    powers: &[u32],
) -> Result<AuditReport> {
    let mu = match representation {
        Representation::Mu => weights.clone(),
        Representation::Lambda => mu_from_lambda(tree, weights, Direction::Backward, 1.0),
    };
    let space = SpaceSpec::new(kind, mu.clone());
    let unweighted = WeightFamily::Constant(1.0);
    let mut rows = Vec::new();
    let mut decay = Vec::new();
    for &v in basis {
        let mut norms = Vec::new();
        for &n in powers {
            let shift_decay = match tree.ancestor(v, n) {
                Ok(Some(w)) => mu.at(tree, w).abs(),
                Ok(None) => 0.0,
                Err(e) => return Err(e),
            };
            let g = build_r_witness(tree, &mu, kind, v, n)?;
            let witness_norm = space.norm(tree, &g);
            let mut img = g.clone();
            for _ in 0..n {
                img = apply_backward(tree, &unweighted, &img)?;
            }
            let right_inverse_residual = space.norm(tree, &img.sub(&FinVector::unit(v)));
            let (approximant_gap, approximant_image, branch, m_value, bound, guarantees_ok) =
                if tree.is_rooted() {
                    (None, None, None, None, None, None)
                } else {
                    let bundle = build_i_witness(tree, &mu, kind, v, n)?;
                    let f = bundle.i_vec.clone().unwrap();
                    let gap = space.norm(tree, &f.sub(&FinVector::unit(v)));
                    let mut bf = f;
                    for _ in 0..n {
                        bf = apply_backward(tree, &unweighted, &bf)?;
                    }
                    let image = space.norm(tree, &bf);
                    let b = bundle.bound.unwrap();
                    let ok = gap <= b * (1.0 + 1e-9) + 1e-15 && image <= b * (1.0 + 1e-9) + 1e-15;
                    (
                        Some(gap),
                        Some(image),
                        bundle.branch,
                        bundle.m_value,
                        bundle.bound,
                        Some(ok),
                    )
                };
            norms.push(witness_norm);
            rows.push(AuditRow {
                vertex: v.0,
                n,
                shift_decay,
                witness_norm,
                right_inverse_residual,
                approximant_gap,
                approximant_image,
                branch,
                m_value,
                bound,
                guarantees_ok,
            });
        }
        let decaying = norms.len() >= 2
            && norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
            && *norms.last().unwrap() <= 0.5 * norms[0];
        decay.push((v.0, decaying));
    }
    Ok(AuditReport { space: kind.to_string(), rows, decay })
}
