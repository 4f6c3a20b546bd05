//! Weighted sequence spaces over the vertex set: exponents, norms and the
//! dual pairing. Exponents are kept as exact rationals so dual exponents and
//! cross-power comparisons stay exact; only norm evaluation rounds to f64.

use crate::error::{Error, Result};
use crate::tree::{DirectedTree, VertexId};
use crate::weights::WeightFamily;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A rational exponent `p = num/den >= 1`, stored reduced.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PExp {
    num: u32,
    den: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl PExp {
    pub fn new(num: u32, den: u32) -> Result<PExp> {
        if den == 0 || num < den {
            return Err(Error::InvalidSpec(format!("exponent {num}/{den} must be >= 1")));
        }
        let g = gcd(num, den);
        Ok(PExp { num: num / g, den: den / g })
    }

    pub const ONE: PExp = PExp { num: 1, den: 1 };
    pub const TWO: PExp = PExp { num: 2, den: 1 };

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    /// Conjugate exponent `p* = p/(p-1)`; infinite when `p = 1`.
    pub fn dual(self) -> DualExp {
        if self.is_one() {
            DualExp::Infinite
        } else {
            DualExp::Finite(PExp {
                num: self.num / gcd(self.num, self.num - self.den),
                den: (self.num - self.den) / gcd(self.num, self.num - self.den),
            })
        }
    }

    /// Parse "2", "1.5" or "3/2".
    pub fn parse(s: &str) -> Result<PExp> {
        if let Some((a, b)) = s.split_once('/') {
            let num: u32 = a.trim().parse().map_err(|_| bad_exp(s))?;
            let den: u32 = b.trim().parse().map_err(|_| bad_exp(s))?;
            return PExp::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad_exp(s))? };
            let frac_digits = frac.len() as u32;
            if frac_digits > 6 {
                return Err(bad_exp(s));
            }
            let frac: u64 = frac.parse().map_err(|_| bad_exp(s))?;
            let den = 10u64.pow(frac_digits);
            let num = int * den + frac;
            if num > u32::MAX as u64 {
                return Err(bad_exp(s));
            }
            return PExp::new(num as u32, den as u32);
        }
        let num: u32 = s.trim().parse().map_err(|_| bad_exp(s))?;
        PExp::new(num, 1)
    }
}

fn bad_exp(s: &str) -> Error {
    Error::InvalidSpec(format!("cannot parse exponent '{s}'"))
}

impl fmt::Display for PExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Conjugate exponent value.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub enum DualExp {
    Finite(PExp),
    Infinite,
}

/// `x^q` with fast paths for small integer exponents.
pub fn powq(x: f64, q: PExp) -> f64 {
    if q.den == 1 {
        match q.num {
            1 => x,
            2 => x * x,
            3 => x * x * x,
            4 => {
                let s = x * x;
                s * s
            }
            _ => x.powi(q.num as i32),
        }
    } else {
        x.powf(q.value())
    }
}

/// The Banach space kind. `LInf` participates in norm formulas only.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub enum SpaceKind {
    Lp(PExp),
    C0,
    LInf,
}

impl SpaceKind {
    pub fn parse(s: &str) -> Result<SpaceKind> {
        match s {
            "c0" => Ok(SpaceKind::C0),
            "linf" => Ok(SpaceKind::LInf),
            "l1" => Ok(SpaceKind::Lp(PExp::ONE)),
            "l2" => Ok(SpaceKind::Lp(PExp::TWO)),
            other => {
                if let Some(p) = other.strip_prefix("lp:") {
                    Ok(SpaceKind::Lp(PExp::parse(p)?))
                } else {
                    Err(Error::InvalidSpec(format!(
                        "unknown space '{other}' (expected l1, l2, lp:P, c0, linf)"
                    )))
                }
            }
        }
    }

    /// The dual-space exponent: `p* = p/(p-1)` for `1<p<infty`, infinite for
    /// `p = 1`, and 1 for `c0` and `linf`.
    pub fn dual_exponent(&self) -> DualExp {
        match self {
            SpaceKind::Lp(p) => p.dual(),
            SpaceKind::C0 | SpaceKind::LInf => DualExp::Finite(PExp::ONE),
        }
    }

    /// How diagnostic quantities aggregate over branch products: the
    /// dynamics conditions use `sup |..|` on l1 and `sum |..|^{p*}` with the
    /// convention `p* = 1` on c0.
    pub fn aggregation(&self) -> Result<Agg> {
        match self {
            SpaceKind::Lp(p) => match p.dual() {
                DualExp::Infinite => Ok(Agg::Max),
                DualExp::Finite(q) => Ok(Agg::SumPow(q)),
            },
            SpaceKind::C0 => Ok(Agg::SumPow(PExp::ONE)),
            SpaceKind::LInf => Err(Error::InvalidSpec(
                "dynamics on linf is not supported (norms only)".into(),
            )),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Lp(p) if p.is_one() => write!(f, "l1"),
            SpaceKind::Lp(p) if *p == PExp::TWO => write!(f, "l2"),
            SpaceKind::Lp(p) => write!(f, "lp:{p}"),
            SpaceKind::C0 => write!(f, "c0"),
            SpaceKind::LInf => write!(f, "linf"),
        }
    }
}

/// Aggregation mode for branch-product diagnostics.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Agg {
    /// supremum of raw branch products (the l1 case)
    Max,
    /// sum of q-th powers of branch products
    SumPow(PExp),
}

impl Agg {
    pub fn term(&self, x: f64) -> f64 {
        match self {
            Agg::Max => x,
            Agg::SumPow(q) => powq(x, *q),
        }
    }

    pub fn combine(&self, a: f64, b: f64) -> f64 {
        match self {
            Agg::Max => a.max(b),
            Agg::SumPow(_) => a + b,
        }
    }

    pub fn zero(&self) -> f64 {
        0.0
    }
}

/// The Banach space together with its weight family.
#[derive(Clone, Debug)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub mu: WeightFamily,
}

impl SpaceSpec {
    pub fn unweighted(kind: SpaceKind) -> SpaceSpec {
        SpaceSpec { kind, mu: WeightFamily::Constant(1.0) }
    }

    pub fn new(kind: SpaceKind, mu: WeightFamily) -> SpaceSpec {
        SpaceSpec { kind, mu }
    }

    /// The space norm of a finite-support vector.
    pub fn norm(&self, tree: &DirectedTree, f: &FinVector) -> f64 {
        match self.kind {
            SpaceKind::Lp(p) => {
                if p.is_one() {
                    f.iter().map(|(v, c)| (c * self.mu.at(tree, v)).abs()).sum()
                } else {
                    let s: f64 = f
                        .iter()
                        .map(|(v, c)| powq((c * self.mu.at(tree, v)).abs(), p))
                        .sum();
                    s.powf(1.0 / p.value())
                }
            }
            SpaceKind::C0 | SpaceKind::LInf => f
                .iter()
                .map(|(v, c)| (c * self.mu.at(tree, v)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// A finite-support scalar function on vertices. Zero coefficients are pruned.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FinVector {
    entries: BTreeMap<VertexId, f64>,
}

impl FinVector {
    pub fn new() -> FinVector {
        FinVector { entries: BTreeMap::new() }
    }

    /// The basis vector `e_v`.
    pub fn unit(v: VertexId) -> FinVector {
        let mut entries = BTreeMap::new();
        entries.insert(v, 1.0);
        FinVector { entries }
    }

    pub fn from_entries(items: impl IntoIterator<Item = (VertexId, f64)>) -> FinVector {
        let mut f = FinVector::new();
        for (v, c) in items {
            f.add_at(v, c);
        }
        f
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.entries.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, v: VertexId, c: f64) {
        if c == 0.0 {
            self.entries.remove(&v);
        } else {
            self.entries.insert(v, c);
        }
    }

    pub fn add_at(&mut self, v: VertexId, c: f64) {
        let cur = self.get(v) + c;
        self.set(v, cur);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.entries.iter().map(|(&v, &c)| (v, c))
    }

    pub fn support(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: f64) -> FinVector {
        FinVector::from_entries(self.iter().map(|(v, x)| (v, c * x)))
    }

    pub fn add(&self, other: &FinVector) -> FinVector {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.add_at(v, c);
        }
        out
    }

    pub fn sub(&self, other: &FinVector) -> FinVector {
        let mut out = self.clone();
        for (v, c) in other.iter() {
            out.add_at(v, -c);
        }
        out
    }

    /// Plain l1 mass of the coefficients (no space weight).
    pub fn mass(&self) -> f64 {
        self.iter().map(|(_, c)| c.abs()).sum()
    }

    pub fn to_map(&self) -> BTreeMap<u32, f64> {
        self.iter().map(|(v, c)| (v.0, c)).collect()
    }

    pub fn from_map(map: &BTreeMap<u32, f64>) -> FinVector {
        FinVector::from_entries(map.iter().map(|(&v, &c)| (VertexId(v), c)))
    }
}

/// The bilinear pairing `<f, g> = sum_v f(v) g(v)` (real scalars).
pub fn pairing(f: &FinVector, g: &FinVector) -> f64 {
    // iterate the smaller support
    let (small, big) = if f.support_len() <= g.support_len() { (f, g) } else { (g, f) };
    small.iter().map(|(v, c)| c * big.get(v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{DirectedTree, ExtensionRule};

    fn chain(len: i32) -> DirectedTree {
        DirectedTree::from_rule(true, ExtensionRule::Constant(1), len, 0).unwrap()
    }

    #[test]
    fn exponent_duals() {
        assert_eq!(PExp::parse("1").unwrap().dual(), DualExp::Infinite);
        assert_eq!(PExp::parse("2").unwrap().dual(), DualExp::Finite(PExp::TWO));
        assert_eq!(
            PExp::parse("1.5").unwrap().dual(),
            DualExp::Finite(PExp::new(3, 1).unwrap())
        );
        assert_eq!(
            PExp::parse("3").unwrap().dual(),
            DualExp::Finite(PExp::new(3, 2).unwrap())
        );
        assert_eq!(PExp::parse("3/2").unwrap(), PExp::parse("1.5").unwrap());
    }

    #[test]
    fn space_parse_roundtrip() {
        for s in ["l1", "l2", "lp:3/2", "c0", "linf"] {
            let k = SpaceKind::parse(s).unwrap();
            assert_eq!(k.to_string(), s);
        }
        // decimal form parses to the same space as the fraction form
        assert_eq!(
            SpaceKind::parse("lp:1.5").unwrap(),
            SpaceKind::parse("lp:3/2").unwrap()
        );
        assert!(SpaceKind::parse("lp:0.5").is_err());
    }

    #[test]
    fn unit_vector_norms() {
        let t = chain(4);
        let mu = WeightFamily::Constant(3.0);
        let v = VertexId(2);
        for kind in [SpaceKind::Lp(PExp::ONE), SpaceKind::Lp(PExp::TWO), SpaceKind::C0] {
            let space = SpaceSpec::new(kind, mu.clone());
            assert_eq!(space.norm(&t, &FinVector::unit(v)), 3.0);
        }
    }

    #[test]
    fn l1_and_l2_norms() {
        let t = chain(4);
        let f = FinVector::from_entries([(VertexId(1), 2.0), (VertexId(2), 3.0)]);
        let l1 = SpaceSpec::unweighted(SpaceKind::Lp(PExp::ONE));
        assert_eq!(l1.norm(&t, &f), 5.0);

        // 3-4-5 with weights
        let mu = WeightFamily::Explicit(
            [(VertexId(0), 1.0), (VertexId(1), 3.0), (VertexId(2), 4.0), (VertexId(3), 1.0), (VertexId(4), 1.0)]
                .into_iter()
                .collect(),
        );
        let l2 = SpaceSpec::new(SpaceKind::Lp(PExp::TWO), mu);
        let g = FinVector::from_entries([(VertexId(1), 1.0), (VertexId(2), 1.0)]);
        assert!((l2.norm(&t, &g) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_basics() {
        let e1 = FinVector::unit(VertexId(1));
        let e2 = FinVector::unit(VertexId(2));
        assert_eq!(pairing(&e1, &e1), 1.0);
        assert_eq!(pairing(&e1, &e2), 0.0);
        let f = FinVector::from_entries([(VertexId(1), 2.0), (VertexId(2), 1.0)]);
        let g = FinVector::from_entries([(VertexId(1), 3.0)]);
        assert_eq!(pairing(&f, &g), 6.0);
    }

    #[test]
    fn zero_entries_pruned() {
        let mut f = FinVector::unit(VertexId(3));
        f.add_at(VertexId(3), -1.0);
        assert!(f.is_zero());
        assert_eq!(f.support_len(), 0);
    }
}
