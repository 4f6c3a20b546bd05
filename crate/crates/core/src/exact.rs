//! Exact rational mode: BigRational arithmetic for the acceptance oracles and
//! for identities that the contracts require to hold exactly (adjoint and
//! conjugacy residuals, witness mass identities, norm-power comparisons).
//!
//! Fractional powers are handled by exact integer-root extraction where the
//! operand is a perfect power, and by cross-powering for comparisons.

use crate::error::{Error, Result};
use crate::extremal::ExtremalMode;
use crate::spaces::PExp;
use crate::tree::{DirectedTree, VertexId};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

pub type Rat = BigRational;

/// Exact conversion of an f64 (every finite f64 is rational).
pub fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite f64")
}

pub fn rat_of(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact `x^(1/n)` for positive `x`, when `x` is a perfect n-th power.
pub fn nth_root_exact(x: &Rat, n: u32) -> Option<Rat> {
    if n == 0 || !x.is_positive() {
        return None;
    }
    if n == 1 {
        return Some(x.clone());
    }
    let num = x.numer().to_biguint()?;
    let den = x.denom().to_biguint()?;
    let rn = num.nth_root(n);
    let rd = den.nth_root(n);
    if rn.pow(n) != num || rd.pow(n) != den {
        return None;
    }
    Some(BigRational::new(BigInt::from(rn), BigInt::from(rd)))
}

/// Exact `x^(num/den)` for positive `x`, when representable.
pub fn rat_pow(x: &Rat, num: i64, den: u32) -> Option<Rat> {
    if !x.is_positive() {
        return None;
    }
    let root = nth_root_exact(x, den)?;
    let e: i32 = num.unsigned_abs().try_into().ok()?;
    let p = root.pow(e);
    Some(if num < 0 { p.recip() } else { p })
}

/// `|x|^q` for a rational exponent, when representable.
pub fn rat_pow_pexp(x: &Rat, q: PExp) -> Option<Rat> {
    rat_pow(&x.abs(), q.num() as i64, q.den())
}

/// Compare `a^(1/m)` with `b^(1/n)` for positive rationals by cross-powering.
pub fn cmp_roots(a: &Rat, m: u32, b: &Rat, n: u32) -> std::cmp::Ordering {
    a.pow(n as i32).cmp(&b.pow(m as i32))
}

/// Exact weight family for rational-mode computations.
#[derive(Clone, Debug)]
pub enum RatWeights {
    Constant(Rat),
    Explicit(BTreeMap<VertexId, Rat>),
}

impl RatWeights {
    pub fn at(&self, v: VertexId) -> Rat {
        match self {
            RatWeights::Constant(c) => c.clone(),
            RatWeights::Explicit(m) => m
                .get(&v)
                .unwrap_or_else(|| panic!("rational weights do not cover {v}"))
                .clone(),
        }
    }

    pub fn from_f64_map(map: &BTreeMap<VertexId, f64>) -> RatWeights {
        RatWeights::Explicit(map.iter().map(|(&v, &x)| (v, rat_from_f64(x))).collect())
    }
}

/// Finite-support rational vector.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RatVector {
    entries: BTreeMap<VertexId, Rat>,
}

impl RatVector {
    pub fn new() -> RatVector {
        RatVector { entries: BTreeMap::new() }
    }

    pub fn unit(v: VertexId) -> RatVector {
        let mut entries = BTreeMap::new();
        entries.insert(v, Rat::one());
        RatVector { entries }
    }

    pub fn from_entries(items: impl IntoIterator<Item = (VertexId, Rat)>) -> RatVector {
        let mut f = RatVector::new();
        for (v, c) in items {
            f.add_at(v, c);
        }
        f
    }

    pub fn get(&self, v: VertexId) -> Rat {
        self.entries.get(&v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_at(&mut self, v: VertexId, c: Rat) {
        let cur = self.get(v) + c;
        if cur.is_zero() {
            self.entries.remove(&v);
        } else {
            self.entries.insert(v, cur);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &Rat)> + '_ {
        self.entries.iter().map(|(&v, c)| (v, c))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: &Rat) -> RatVector {
        RatVector::from_entries(self.iter().map(|(v, x)| (v, c * x)))
    }

    pub fn sub(&self, other: &RatVector) -> RatVector {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.add_at(v, -c.clone());
        }
        out
    }

    /// Plain l1 mass of the coefficients.
    pub fn mass(&self) -> Rat {
        self.iter().fold(Rat::zero(), |acc, (_, c)| acc + c.abs())
    }

    pub fn to_f64(&self) -> crate::spaces::FinVector {
        use num_traits::ToPrimitive;
        crate::spaces::FinVector::from_entries(
            self.iter().map(|(v, c)| (v, c.to_f64().unwrap_or(0.0))),
        )
    }
}

/// Exact weighted forward shift: `(S f)(u) = lambda_u f(prt(u))`.
pub fn apply_forward_exact(
    tree: &DirectedTree,
    lambda: &RatWeights,
    f: &RatVector,
) -> Result<RatVector> {
    let mut out = RatVector::new();
    for (v, c) in f.iter() {
        if tree.is_frontier(v) {
            return Err(Error::FrontierHit(v));
        }
        for u in tree.children(v) {
            out.add_at(u, lambda.at(u) * c);
        }
    }
    Ok(out)
}

/// Exact weighted backward shift: image coefficient at `prt(u)` gains
/// `lambda_u f(u)`; support at the truncation top of an unrooted tree is an
/// error since its parent exists but is not materialized.
pub fn apply_backward_exact(
    tree: &DirectedTree,
    lambda: &RatWeights,
    f: &RatVector,
) -> Result<RatVector> {
    let mut out = RatVector::new();
    for (u, c) in f.iter() {
        match tree.parent_of(u) {
            Some(p) => out.add_at(p, lambda.at(u) * c),
            None => {
                if !tree.is_rooted() {
                    return Err(Error::TruncationExceeded { needed: 1, available: 0 });
                }
                // rooted: the root coefficient is simply dropped
            }
        }
    }
    Ok(out)
}

/// Exact bilinear pairing.
pub fn pairing_exact(f: &RatVector, g: &RatVector) -> Rat {
    f.iter().fold(Rat::zero(), |acc, (v, c)| acc + c * g.get(v))
}

/// Exact branch product.
pub fn path_product_exact(
    lambda: &RatWeights,
    tree: &DirectedTree,
    v: VertexId,
    u: VertexId,
) -> Result<Rat> {
    let mut prod = Rat::one();
    let mut cur = u;
    while cur != v {
        prod *= lambda.at(cur);
        cur = tree
            .parent_of(cur)
            .ok_or(Error::NotADescendant { ancestor: v, descendant: u })?;
    }
    Ok(prod)
}

/// Exact `||f||^p = sum |f(v) mu_v|^p`, when every term is representable.
pub fn norm_pow_exact(p: PExp, mu: &RatWeights, f: &RatVector) -> Option<Rat> {
    let mut acc = Rat::zero();
    for (v, c) in f.iter() {
        let t = (c * mu.at(v)).abs();
        if t.is_zero() {
            continue;
        }
        acc += rat_pow(&t, p.num() as i64, p.den())?;
    }
    Some(acc)
}

/// Exact sup-norm `sup |f(v) mu_v|` (for c0-type spaces).
pub fn sup_norm_exact(mu: &RatWeights, f: &RatVector) -> Rat {
    f.iter()
        .map(|(v, c)| (c * mu.at(v)).abs())
        .fold(Rat::zero(), |a, b| if b > a { b } else { a })
}

/// Exact space weights conjugating the weighted shift on the unweighted
/// space to the unweighted shift on the weighted space (anchor value 1).
/// `forward` selects the forward-shift linkage `lambda_v = mu_v / mu_prt(v)`;
/// otherwise the backward linkage `lambda_v = mu_prt(v) / mu_v` is used.
pub fn mu_from_lambda_exact(tree: &DirectedTree, lambda: &RatWeights, forward: bool) -> RatWeights {
    let mut mu: BTreeMap<VertexId, Rat> = BTreeMap::new();
    mu.insert(tree.anchor(), Rat::one());
    let mut v = tree.anchor();
    while let Some(p) = tree.parent_of(v) {
        let lv = lambda.at(v);
        let parent_val = if forward { mu[&v].clone() / lv } else { mu[&v].clone() * lv };
        mu.insert(p, parent_val);
        v = p;
    }
    let mut stack = vec![tree.top()];
    while let Some(v) = stack.pop() {
        for u in tree.children(v) {
            if !mu.contains_key(&u) {
                let lu = lambda.at(u);
                let val = if forward { mu[&v].clone() * lu } else { mu[&v].clone() / lu };
                mu.insert(u, val);
            }
            stack.push(u);
        }
    }
    RatWeights::Explicit(mu)
}

/// `phi_mu(B f) - B_lambda(phi_mu f)` (or the forward variant), exactly.
pub fn conjugacy_defect_exact(
    tree: &DirectedTree,
    lambda: &RatWeights,
    mu: &RatWeights,
    f: &RatVector,
    forward: bool,
) -> Result<RatVector> {
    let phi = |g: &RatVector| -> RatVector {
        RatVector::from_entries(g.iter().map(|(v, c)| (v, mu.at(v) * c)))
    };
    let ones = RatWeights::Constant(Rat::one());
    let (lhs, rhs) = if forward {
        (
            phi(&apply_forward_exact(tree, &ones, f)?),
            apply_forward_exact(tree, lambda, &phi(f))?,
        )
    } else {
        (
            phi(&apply_backward_exact(tree, &ones, f)?),
            apply_backward_exact(tree, lambda, &phi(f))?,
        )
    };
    Ok(lhs.sub(&rhs))
}

/// Exact reverse-Hölder minimizer, when every needed power is rational.
/// Unit mass is exact by construction.
pub fn minimizer_exact(entries: &[(VertexId, Rat)], mode: ExtremalMode) -> Option<RatVector> {
    match mode {
        ExtremalMode::P1 => {
            let mut best: Option<(VertexId, Rat)> = None;
            for (v, m) in entries {
                let a = m.abs();
                match &best {
                    None => best = Some((*v, a)),
                    Some((bv, ba)) => {
                        if a < *ba || (a == *ba && v < bv) {
                            best = Some((*v, a));
                        }
                    }
                }
            }
            Some(RatVector::unit(best?.0))
        }
        ExtremalMode::P(p) => {
            let q = p.dual();
            let q = match q {
                crate::spaces::DualExp::Finite(q) => q,
                crate::spaces::DualExp::Infinite => return None,
            };
            let mut raw = Vec::new();
            let mut total = Rat::zero();
            for (v, m) in entries {
                let w = rat_pow(&m.abs(), -(q.num() as i64), q.den())?;
                total += &w;
                raw.push((*v, w));
            }
            Some(RatVector::from_entries(
                raw.into_iter().map(|(v, w)| (v, w / &total)),
            ))
        }
        ExtremalMode::Sup => {
            let mut raw = Vec::new();
            let mut total = Rat::zero();
            for (v, m) in entries {
                let w = m.abs().recip();
                total += &w;
                raw.push((*v, w));
            }
            Some(RatVector::from_entries(
                raw.into_iter().map(|(v, w)| (v, w / &total)),
            ))
        }
    }
}

/// Exact infimum of the extremal problem, reported as `(value^s, s)` so the
/// caller can compare by cross-powering: the infimum equals the returned
/// rational raised to `1/s`.
pub fn infimum_pow_exact(entries: &[(VertexId, Rat)], mode: ExtremalMode) -> Option<(Rat, u32)> {
    match mode {
        ExtremalMode::P1 => {
            let mut best: Option<Rat> = None;
            for (_, m) in entries {
                let a = m.abs();
                if best.as_ref().is_none_or(|b| a < *b) {
                    best = Some(a);
                }
            }
            best.map(|b| (b, 1))
        }
        ExtremalMode::P(p) => {
            // infimum = (sum |mu|^{-q})^{-1/q}; report value^q with s = q
            let q = match p.dual() {
                crate::spaces::DualExp::Finite(q) => q,
                crate::spaces::DualExp::Infinite => return None,
            };
            if q.den() != 1 {
                // cross-power once more: value^(q_num) = (sum)^{-q_den} is
                // representable; report (sum^{-q_den}, q_num)
                let mut s = Rat::zero();
                for (_, m) in entries {
                    s += rat_pow(&m.abs(), -(q.num() as i64), q.den())?;
                }
                return Some((s.pow(-(q.den() as i32)), q.num()));
            }
            let mut s = Rat::zero();
            for (_, m) in entries {
                s += rat_pow(&m.abs(), -(q.num() as i64), 1)?;
            }
            Some((s.recip(), q.num()))
        }
        ExtremalMode::Sup => {
            let mut s = Rat::zero();
            for (_, m) in entries {
                s += m.abs().recip();
            }
            Some((s.recip(), 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_and_powers() {
        let x = rat_of(9, 4);
        assert_eq!(nth_root_exact(&x, 2), Some(rat_of(3, 2)));
        assert_eq!(nth_root_exact(&rat_of(2, 1), 2), None);
        // (9/4)^(3/2) = 27/8
        assert_eq!(rat_pow(&x, 3, 2), Some(rat_of(27, 8)));
        // (9/4)^(-1/2) = 2/3
        assert_eq!(rat_pow(&x, -1, 2), Some(rat_of(2, 3)));
    }

    #[test]
    fn f64_conversion_is_exact() {
        let r = rat_from_f64(0.5);
        assert_eq!(r, rat_of(1, 2));
        // 0.1 is not 1/10 in binary; conversion must preserve the bits
        let r = rat_from_f64(0.1);
        assert_ne!(r, rat_of(1, 10));
    }

    #[test]
    fn cross_power_comparison() {
        // 2^(1/2) vs 3^(1/3): 2^3 = 8 > 3^2 = 9? no, 8 < 9, so 2^(1/2) < 3^(1/3)...
        // 2^(1/2) ~ 1.414, 3^(1/3) ~ 1.442
        assert_eq!(
            cmp_roots(&rat_of(2, 1), 2, &rat_of(3, 1), 3),
            std::cmp::Ordering::Less
        );
    }

    #[test]
    fn exact_minimizer_masses() {
        let entries = vec![
            (VertexId(0), rat_of(1, 1)),
            (VertexId(1), rat_of(2, 1)),
            (VertexId(2), rat_of(5, 3)),
        ];
        for mode in [
            ExtremalMode::P1,
            ExtremalMode::P(PExp::TWO),
            ExtremalMode::Sup,
        ] {
            let x = minimizer_exact(&entries, mode).unwrap();
            assert_eq!(x.mass(), Rat::one());
        }
    }

    #[test]
    fn exact_sup_infimum() {
        // mu = (1, 2): infimum 2/3
        let entries = vec![(VertexId(0), rat_of(1, 1)), (VertexId(1), rat_of(2, 1))];
        let (val, s) = infimum_pow_exact(&entries, ExtremalMode::Sup).unwrap();
        assert_eq!(s, 1);
        assert_eq!(val, rat_of(2, 3));
    }
}
