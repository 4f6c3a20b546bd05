//! Weight families: one nonzero scalar per vertex, in several symbolic
//! flavours, plus branch products along tree edges.

use crate::error::{Error, Result};
use crate::spaces::{powq, DualExp};
use crate::tree::{cycle_of, DirectedTree, Tail, VertexId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Per-generation weight values with hold/periodic tails on either side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightProfile {
    /// values for generations 0, 1, 2, ...
    pub right: Vec<f64>,
    /// number of trailing entries that cycle; 0 or missing means hold-last
    #[serde(default)]
    pub right_period: u32,
    /// values for generations -1, -2, ...
    #[serde(default)]
    pub left: Vec<f64>,
    #[serde(default)]
    pub left_period: u32,
}

fn profile_value(table: &[f64], period: u32, idx: usize) -> Option<f64> {
    if idx < table.len() {
        return Some(table[idx]);
    }
    let last = *table.last()?;
    if period == 0 {
        return Some(last);
    }
    let k = (period as usize).clamp(1, table.len());
    let past = idx - table.len();
    Some(table[table.len() - k + past % k])
}

impl WeightProfile {
    pub fn value(&self, g: i64) -> Option<f64> {
        if g >= 0 {
            profile_value(&self.right, self.right_period, g as usize)
        } else if self.left.is_empty() {
            profile_value(&self.right, self.right_period, 0).map(|_| self.right[0])
        } else {
            profile_value(&self.left, self.left_period, (-g - 1) as usize)
        }
    }

    fn tail(period: u32) -> Tail {
        if period == 0 {
            Tail::Hold
        } else {
            Tail::Periodic(period)
        }
    }

    /// (pre-period, cycle) on the right side.
    pub fn right_cycle(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let idx: Vec<u32> = (0..self.right.len() as u32).collect();
        let (pre, cyc) = cycle_of(&idx, Self::tail(self.right_period))?;
        Some((
            pre.iter().map(|&i| self.right[i as usize]).collect(),
            cyc.iter().map(|&i| self.right[i as usize]).collect(),
        ))
    }

    /// (pre-period, cycle) on the left side, values for generations -1, -2, ...
    pub fn left_cycle(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.left.is_empty() {
            return Some((Vec::new(), vec![self.right[0]]));
        }
        let idx: Vec<u32> = (0..self.left.len() as u32).collect();
        let (pre, cyc) = cycle_of(&idx, Self::tail(self.left_period))?;
        Some((
            pre.iter().map(|&i| self.left[i as usize]).collect(),
            cyc.iter().map(|&i| self.left[i as usize]).collect(),
        ))
    }

    fn validate(&self) -> Result<()> {
        if self.right.is_empty() {
            return Err(Error::InvalidSpec("weight profile needs a right table".into()));
        }
        if self.right.iter().chain(self.left.iter()).any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::InvalidSpec("weight profile entries must be nonzero finite".into()));
        }
        Ok(())
    }
}

/// Arbitrary per-vertex weight rule.
pub type WeightFn = Arc<dyn Fn(&DirectedTree, VertexId) -> f64 + Send + Sync>;

/// A family of nonzero scalars indexed by vertices.
#[derive(Clone)]
pub enum WeightFamily {
    /// the same value everywhere (a Rolewicz multiple when used as shift weights)
    Constant(f64),
    /// explicit per-vertex values
    Explicit(BTreeMap<VertexId, f64>),
    /// dense per-vertex values, id-indexed (used by the weight constructor)
    Dense(Arc<Vec<f64>>),
    /// value depends only on the generation
    Symmetric(WeightProfile),
    /// the Dirichlet-shift family: `|X(v)|^{-1/2} ((n_v+q)/(n_v+1))^{1/2}`
    /// at each child of a generation-`n_v` vertex `v`
    Dirichlet { q: f64 },
    /// arbitrary value as a function of the tree and vertex
    Procedural(WeightFn),
    /// the mixing construction: weight 2 on each first child right of the
    /// anchor, sibling/left budgets split per the dual exponent
    MixingLineage { dual: DualExp },
}

impl fmt::Debug for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFamily::Constant(c) => write!(f, "Constant({c})"),
            WeightFamily::Explicit(m) => write!(f, "Explicit({} entries)", m.len()),
            WeightFamily::Dense(v) => write!(f, "Dense({} entries)", v.len()),
            WeightFamily::Symmetric(p) => write!(f, "Symmetric({p:?})"),
            WeightFamily::Dirichlet { q } => write!(f, "Dirichlet {{ q: {q} }}"),
            WeightFamily::Procedural(_) => write!(f, "Procedural(..)"),
            WeightFamily::MixingLineage { dual } => write!(f, "MixingLineage {{ dual: {dual:?} }}"),
        }
    }
}

impl WeightFamily {
    /// The weight at a materialized vertex.
    ///
    /// Panics when an explicit family does not cover `v`; families are
    /// validated against the tree at the API boundaries.
    pub fn at(&self, tree: &DirectedTree, v: VertexId) -> f64 {
        match self {
            WeightFamily::Constant(c) => *c,
            WeightFamily::Explicit(m) => *m
                .get(&v)
                .unwrap_or_else(|| panic!("explicit weight family does not cover {v}")),
            WeightFamily::Dense(vals) => {
                let x = vals[v.index()];
                assert!(!x.is_nan(), "dense weight family does not cover {v}");
                x
            }
            WeightFamily::Symmetric(p) => p
                .value(tree.generation_index(v) as i64)
                .unwrap_or_else(|| panic!("weight profile does not cover {v}")),
            WeightFamily::Dirichlet { q } => match tree.parent_of(v) {
                // the root weight is never used by either shift
                None => 1.0,
                Some(parent) => {
                    let k = tree.child_count(parent) as f64;
                    let n = tree.generation_index(parent) as f64;
                    (1.0 / k).sqrt() * ((n + q) / (n + 1.0)).sqrt()
                }
            },
            WeightFamily::Procedural(f) => f(tree, v),
            WeightFamily::MixingLineage { dual } => mixing_weight(tree, v, *dual),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            WeightFamily::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// Check nonzero coverage of every materialized vertex.
    pub fn validate(&self, tree: &DirectedTree) -> Result<()> {
        match self {
            WeightFamily::Constant(c) => {
                if *c == 0.0 || !c.is_finite() {
                    return Err(Error::InvalidSpec("constant weight must be nonzero finite".into()));
                }
            }
            WeightFamily::Explicit(m) => {
                for v in tree.vertices() {
                    match m.get(&v) {
                        None => {
                            return Err(Error::InvalidSpec(format!(
                                "explicit weights do not cover {v}"
                            )))
                        }
                        Some(&x) if x == 0.0 || !x.is_finite() => {
                            return Err(Error::InvalidSpec(format!("weight at {v} must be nonzero")))
                        }
                        _ => {}
                    }
                }
            }
            WeightFamily::Dense(vals) => {
                if vals.len() < tree.vertex_count() {
                    return Err(Error::InvalidSpec("dense weights do not cover the tree".into()));
                }
                for v in tree.vertices() {
                    let x = vals[v.index()];
                    if x.is_nan() || x == 0.0 {
                        return Err(Error::InvalidSpec(format!("weight at {v} must be nonzero")));
                    }
                }
            }
            WeightFamily::Symmetric(p) => {
                p.validate()?;
                for v in tree.vertices() {
                    if p.value(tree.generation_index(v) as i64).is_none() {
                        return Err(Error::InvalidSpec(format!("weight profile does not cover {v}")));
                    }
                }
            }
            WeightFamily::Dirichlet { q } => {
                if !tree.is_rooted() {
                    return Err(Error::InvalidSpec("dirichlet weights require a rooted tree".into()));
                }
                if *q < 1.0 || !q.is_finite() {
                    return Err(Error::InvalidSpec("dirichlet weights require q >= 1".into()));
                }
            }
            WeightFamily::Procedural(_) | WeightFamily::MixingLineage { .. } => {}
        }
        Ok(())
    }

    /// Snapshot of the family as explicit values over the materialized tree.
    pub fn materialize(&self, tree: &DirectedTree) -> BTreeMap<VertexId, f64> {
        tree.vertices().map(|v| (v, self.at(tree, v))).collect()
    }
}

/// The mixing-construction weight at `v` (see the weight constructor):
/// right of the anchor each sibling set has one distinguished child of
/// weight 2 and the rest share budget 1; left of the anchor each sibling set
/// shares budget 1/2.
fn mixing_weight(tree: &DirectedTree, v: VertexId, dual: DualExp) -> f64 {
    let parent = match tree.parent_of(v) {
        Some(p) => p,
        None => return 1.0, // parentless: unused by both shifts within the truncation
    };
    let k = tree.child_count(parent) as f64;
    let pgen = tree.generation_index(parent);
    match dual {
        DualExp::Infinite => {
            if pgen >= 0 && tree.child_at(parent, 0) == v {
                2.0
            } else {
                0.5
            }
        }
        DualExp::Finite(q) => {
            if pgen < 0 {
                // sum over the sibling set of |w|^q stays <= 1/2
                (1.0 / (2.0 * k)).powf(1.0 / q.value())
            } else if tree.child_at(parent, 0) == v {
                2.0
            } else {
                // siblings of the distinguished child share budget 1
                (1.0 / (k - 1.0)).powf(1.0 / q.value())
            }
        }
    }
}

/// Branch product `lambda(v -> u)`: the product of weights along the unique
/// branch from `v` (exclusive) to its descendant `u` (inclusive).
pub fn path_product(
    lambda: &WeightFamily,
    tree: &DirectedTree,
    v: VertexId,
    u: VertexId,
) -> Result<f64> {
    let mut prod = 1.0;
    let mut cur = u;
    while cur != v {
        prod *= lambda.at(tree, cur);
        cur = match tree.parent_of(cur) {
            Some(p) => p,
            None => {
                return Err(Error::NotADescendant { ancestor: v, descendant: u });
            }
        };
    }
    Ok(prod)
}

/// `q`-th power of the absolute branch product, or the raw absolute product
/// under the sup-aggregation convention.
pub fn path_product_pow(
    lambda: &WeightFamily,
    tree: &DirectedTree,
    v: VertexId,
    u: VertexId,
    dual: DualExp,
) -> Result<f64> {
    let p = path_product(lambda, tree, v, u)?.abs();
    Ok(match dual {
        DualExp::Infinite => p,
        DualExp::Finite(q) => powq(p, q),
    })
}

/// Scalar value in a weight spec: real, or complex reduced to its modulus.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl ScalarSpec {
    fn modulus(&self) -> (f64, bool) {
        match self {
            ScalarSpec::Real(x) => (*x, false),
            ScalarSpec::Complex { re, im } => {
                if *im == 0.0 {
                    (*re, false)
                } else {
                    (re.hypot(*im), true)
                }
            }
        }
    }
}

/// JSON description of a weight family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant {
        value: ScalarSpec,
    },
    Symmetric {
        table: Vec<ScalarSpec>,
        #[serde(default)]
        period: Option<u32>,
        #[serde(default)]
        left: Vec<ScalarSpec>,
        #[serde(default)]
        left_period: Option<u32>,
    },
    Dirichlet {
        q: f64,
    },
    Explicit {
        values: BTreeMap<String, ScalarSpec>,
    },
}

/// Result of parsing a weight spec; complex inputs are reduced to their
/// moduli and flagged.
pub struct ParsedWeights {
    pub family: WeightFamily,
    pub phases_discarded: bool,
}

impl WeightSpec {
    pub fn to_family(&self) -> Result<ParsedWeights> {
        let mut flag = false;
        let mut take = |s: &ScalarSpec| -> f64 {
            let (m, discarded) = s.modulus();
            flag |= discarded;
            m
        };
        let family = match self {
            WeightSpec::Constant { value } => WeightFamily::Constant(take(value)),
            WeightSpec::Symmetric { table, period, left, left_period } => {
                WeightFamily::Symmetric(WeightProfile {
                    right: table.iter().map(&mut take).collect(),
                    right_period: period.unwrap_or(0),
                    left: left.iter().map(&mut take).collect(),
                    left_period: left_period.unwrap_or(0),
                })
            }
            WeightSpec::Dirichlet { q } => WeightFamily::Dirichlet { q: *q },
            WeightSpec::Explicit { values } => {
                let mut map = BTreeMap::new();
                for (key, s) in values {
                    let id: u32 = key.parse().map_err(|_| {
                        Error::InvalidSpec(format!("explicit weight key '{key}' is not a vertex id"))
                    })?;
                    map.insert(VertexId(id), take(s));
                }
                WeightFamily::Explicit(map)
            }
        };
        if let WeightFamily::Symmetric(p) = &family {
            p.validate()?;
        }
        if let WeightFamily::Constant(c) = family {
            if c == 0.0 || !c.is_finite() {
                return Err(Error::InvalidSpec("constant weight must be nonzero finite".into()));
            }
        }
        Ok(ParsedWeights { family, phases_discarded: flag })
    }
}
