//! Directed trees, materialized as finite truncations of (possibly infinite)
//! trees together with an extension rule that describes the unmaterialized part.
//!
//! Vertices carry dense ids; vertex 0 is the anchor `v0` (the root when the
//! tree is rooted). Generations are enumerated relative to the anchor, so an
//! unrooted truncation has vertices with negative generation indices. A
//! materialized vertex whose children are not yet materialized is a *frontier*
//! vertex; a childless non-frontier vertex is a true leaf.
//!
//! Trees are immutable after construction: [`DirectedTree::extend_to_horizon`]
//! returns a new value, and vertex ids of the old value remain valid in the
//! new one.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Dense vertex identifier, stable for the lifetime of a tree value and
/// across extensions of it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

const NO_PARENT: u32 = u32::MAX;

/// Tail behaviour of a per-generation profile beyond its explicit table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Repeat the last table entry forever.
    #[default]
    Hold,
    /// Cycle the last `k` table entries forever.
    Periodic(u32),
    /// Multiply the last entry by a constant factor per generation.
    Geometric(u32),
}

/// Outdegree per generation index, for symmetric trees.
///
/// `right[g]` is the outdegree of generation `g >= 0`; `left[k]` is the
/// outdegree of generation `-(k+1)`. Beyond the tables the tails apply.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutdegreeProfile {
    pub right: Vec<u32>,
    #[serde(default)]
    pub right_tail: Tail,
    #[serde(default)]
    pub left: Vec<u32>,
    #[serde(default)]
    pub left_tail: Tail,
}

fn tail_value_u32(table: &[u32], tail: Tail, past: u64) -> Option<u32> {
    // `past` >= 1 counts generations past the end of the table.
    let last = *table.last()?;
    match tail {
        Tail::Hold => Some(last),
        Tail::Periodic(k) => {
            let k = (k as usize).clamp(1, table.len());
            let idx = table.len() - k + ((past - 1) % k as u64) as usize;
            Some(table[idx])
        }
        Tail::Geometric(f) => {
            let mut v = last as u64;
            for _ in 0..past {
                v = v.saturating_mul(f as u64);
                if v > u32::MAX as u64 {
                    return Some(u32::MAX);
                }
            }
            Some(v as u32)
        }
    }
}

impl OutdegreeProfile {
    pub fn constant(out: u32) -> Self {
        OutdegreeProfile {
            right: vec![out],
            right_tail: Tail::Hold,
            left: vec![out],
            left_tail: Tail::Hold,
        }
    }

    /// Outdegree of generation `g`, if defined by the profile.
    pub fn outdegree(&self, g: i64) -> Option<u32> {
        if g >= 0 {
            let idx = g as usize;
            if idx < self.right.len() {
                Some(self.right[idx])
            } else {
                tail_value_u32(&self.right, self.right_tail, (idx - self.right.len()) as u64 + 1)
            }
        } else {
            let idx = (-g - 1) as usize;
            if idx < self.left.len() {
                Some(self.left[idx])
            } else if self.left.is_empty() {
                // An unrooted profile with no left table behaves like its
                // generation-0 entry on the whole left side.
                self.outdegree(0)
            } else {
                tail_value_u32(&self.left, self.left_tail, (idx - self.left.len()) as u64 + 1)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.right.is_empty() {
            return Err(Error::InvalidSpec("symmetric profile needs a right table".into()));
        }
        for (i, &v) in self.right.iter().enumerate() {
            if v == 0 {
                return Err(Error::ZeroOutdegreeRule(i as i32));
            }
        }
        for (i, &v) in self.left.iter().enumerate() {
            if v == 0 {
                return Err(Error::ZeroOutdegreeRule(-(i as i32) - 1));
            }
        }
        if let Tail::Geometric(0) = self.right_tail {
            return Err(Error::ZeroOutdegreeRule(self.right.len() as i32));
        }
        if let Tail::Geometric(0) = self.left_tail {
            return Err(Error::ZeroOutdegreeRule(-(self.left.len() as i32) - 1));
        }
        Ok(())
    }

    /// Eventually repeating outdegree values on the right side, if the tail
    /// is hold/periodic: (pre-period table, repeating cycle).
    pub fn right_cycle(&self) -> Option<(Vec<u32>, Vec<u32>)> {
        cycle_of(&self.right, self.right_tail)
    }

    /// Same for the left side (values for generations -1, -2, ... in that order).
    pub fn left_cycle(&self) -> Option<(Vec<u32>, Vec<u32>)> {
        if self.left.is_empty() {
            let first = *self.right.first()?;
            return Some((Vec::new(), vec![first]));
        }
        cycle_of(&self.left, self.left_tail)
    }
}

pub(crate) fn cycle_of(table: &[u32], tail: Tail) -> Option<(Vec<u32>, Vec<u32>)> {
    if table.is_empty() {
        return None;
    }
    match tail {
        Tail::Hold => {
            let (pre, last) = table.split_at(table.len() - 1);
            Some((pre.to_vec(), last.to_vec()))
        }
        Tail::Periodic(k) => {
            let k = (k as usize).clamp(1, table.len());
            let (pre, cyc) = table.split_at(table.len() - k);
            Some((pre.to_vec(), cyc.to_vec()))
        }
        // factor 1 degenerates to hold
        Tail::Geometric(1) => {
            let (pre, last) = table.split_at(table.len() - 1);
            Some((pre.to_vec(), last.to_vec()))
        }
        Tail::Geometric(_) => None,
    }
}

/// Alternating stretches of two outdegrees with stage-doubling lengths:
/// stage `i >= 0` contributes `low_base * 2^i` generations of outdegree `low`
/// followed by `high_base * 2^i` generations of outdegree `high`. Generations
/// left of the anchor all have outdegree `low`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AlternatingProfile {
    pub low: u32,
    pub high: u32,
    pub low_base: u32,
    pub high_base: u32,
}

impl AlternatingProfile {
    pub fn outdegree(&self, g: i64) -> u32 {
        if g < 0 {
            return self.low;
        }
        let mut g = g as u64;
        let mut scale = 1u64;
        loop {
            let lo = self.low_base as u64 * scale;
            if g < lo {
                return self.low;
            }
            g -= lo;
            let hi = self.high_base as u64 * scale;
            if g < hi {
                return self.high;
            }
            g -= hi;
            scale *= 2;
        }
    }

    fn validate(&self) -> Result<()> {
        if self.low == 0 || self.high == 0 {
            return Err(Error::ZeroOutdegreeRule(0));
        }
        if self.low_base == 0 || self.high_base == 0 {
            return Err(Error::InvalidSpec("alternating profile needs nonzero stretch bases".into()));
        }
        Ok(())
    }
}

/// Rule describing how the unmaterialized part of the tree continues.
#[derive(Clone)]
pub enum ExtensionRule {
    /// Every vertex has exactly this many children.
    Constant(u32),
    /// Outdegree depends only on the generation.
    Symmetric(OutdegreeProfile),
    /// Doubling stretches of two outdegrees.
    Alternating(AlternatingProfile),
    /// Arbitrary outdegree as a function of (vertex id, generation).
    Procedural(Arc<dyn Fn(VertexId, i64) -> u32 + Send + Sync>),
}

impl fmt::Debug for ExtensionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtensionRule::Constant(n) => write!(f, "Constant({n})"),
            ExtensionRule::Symmetric(p) => write!(f, "Symmetric({p:?})"),
            ExtensionRule::Alternating(p) => write!(f, "Alternating({p:?})"),
            ExtensionRule::Procedural(_) => write!(f, "Procedural(..)"),
        }
    }
}

impl ExtensionRule {
    fn outdegree(&self, v: VertexId, g: i64) -> Result<u32> {
        let out = match self {
            ExtensionRule::Constant(n) => *n,
            ExtensionRule::Symmetric(p) => p
                .outdegree(g)
                .ok_or_else(|| Error::InvalidSpec(format!("profile undefined at generation {g}")))?,
            ExtensionRule::Alternating(p) => p.outdegree(g),
            ExtensionRule::Procedural(f) => f(v, g),
        };
        if out == 0 {
            return Err(Error::ZeroOutdegreeRule(g as i32));
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        match self {
            ExtensionRule::Constant(0) => Err(Error::ZeroOutdegreeRule(0)),
            ExtensionRule::Constant(_) => Ok(()),
            ExtensionRule::Symmetric(p) => p.validate(),
            ExtensionRule::Alternating(p) => p.validate(),
            ExtensionRule::Procedural(_) => Ok(()),
        }
    }
}

/// Three-valued answer for structural predicates that may only be observable
/// up to the materialized horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Exact(bool),
    AtHorizon(bool),
}

impl Claim {
    pub fn holds(self) -> bool {
        match self {
            Claim::Exact(b) | Claim::AtHorizon(b) => b,
        }
    }
    pub fn is_exact(self) -> bool {
        matches!(self, Claim::Exact(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    Finite(u32),
    Unbounded,
}

/// Structural predicates the certification theorems branch on.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub rooted: bool,
    pub leafless: Claim,
    pub symmetric: Claim,
    /// Only meaningful for unrooted trees.
    pub free_left_end: Option<Claim>,
    pub max_outdegree: Degree,
    pub max_outdegree_exact: bool,
    pub branchless_z: bool,
    pub vertices: usize,
    pub right_depth: i32,
    pub left_depth: u32,
}

/// JSON description of a tree: either an explicit edge list, an extension
/// rule with initial depths, or an explicit base extended by a rule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeSpec {
    pub rooted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(u32, u32)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_right: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_left: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    Constant {
        out: u32,
    },
    /// `table` is the per-generation outdegree for generations 0, 1, ...;
    /// `left` covers generations -1, -2, ... on unrooted trees.
    #[serde(alias = "table")]
    Symmetric {
        table: Vec<u32>,
        #[serde(default)]
        tail: Tail,
        #[serde(default)]
        left: Vec<u32>,
        #[serde(default)]
        left_tail: Tail,
    },
    Alternating {
        low: u32,
        high: u32,
        low_base: u32,
        high_base: u32,
    },
}

impl RuleSpec {
    pub fn to_rule(&self) -> ExtensionRule {
        match self {
            RuleSpec::Constant { out } => ExtensionRule::Constant(*out),
            RuleSpec::Symmetric { table, tail, left, left_tail } => {
                ExtensionRule::Symmetric(OutdegreeProfile {
                    right: table.clone(),
                    right_tail: *tail,
                    left: left.clone(),
                    left_tail: *left_tail,
                })
            }
            RuleSpec::Alternating { low, high, low_base, high_base } => {
                ExtensionRule::Alternating(AlternatingProfile {
                    low: *low,
                    high: *high,
                    low_base: *low_base,
                    high_base: *high_base,
                })
            }
        }
    }
}

/// A materialized directed tree truncation.
#[derive(Clone, Debug)]
pub struct DirectedTree {
    parent: Vec<u32>,
    child_off: Vec<u32>,
    child_len: Vec<u32>,
    pool: Vec<u32>,
    gen: Vec<i32>,
    frontier: Vec<bool>,
    rooted: bool,
    rule: Option<ExtensionRule>,
    left_depth: u32,
    right_depth: i32,
    vertex_budget: usize,
}

pub const DEFAULT_VERTEX_BUDGET: usize = 16_000_000;

impl DirectedTree {
    /// Build a tree from a spec. Vertex ids in an explicit edge list must be
    /// dense `0..n` and vertex 0 must be the anchor (the root when rooted).
    pub fn build(spec: &TreeSpec) -> Result<DirectedTree> {
        let rule = match &spec.rule {
            Some(r) => {
                let rule = r.to_rule();
                rule.validate()?;
                Some(rule)
            }
            None => None,
        };
        let mut tree = match &spec.edges {
            Some(edges) => Self::from_edges(spec.rooted, edges, rule)?,
            None => {
                if rule.is_none() {
                    return Err(Error::InvalidSpec("tree spec needs edges or a rule".into()));
                }
                DirectedTree {
                    parent: vec![NO_PARENT],
                    child_off: vec![0],
                    child_len: vec![0],
                    pool: Vec::new(),
                    gen: vec![0],
                    frontier: vec![true],
                    rooted: spec.rooted,
                    rule,
                    left_depth: 0,
                    right_depth: 0,
                    vertex_budget: DEFAULT_VERTEX_BUDGET,
                }
            }
        };
        let dr = spec.depth_right.unwrap_or(tree.right_depth);
        let dl = spec.depth_left.unwrap_or(tree.left_depth);
        if dr > tree.right_depth || dl > tree.left_depth {
            tree = tree.extend_to_horizon(dr, dl)?;
        }
        Ok(tree)
    }

    /// Build from an extension rule alone.
    pub fn from_rule(rooted: bool, rule: ExtensionRule, depth_right: i32, depth_left: u32) -> Result<DirectedTree> {
        rule.validate()?;
        let seed = DirectedTree {
            parent: vec![NO_PARENT],
            child_off: vec![0],
            child_len: vec![0],
            pool: Vec::new(),
            gen: vec![0],
            frontier: vec![true],
            rooted,
            rule: Some(rule),
            left_depth: 0,
            right_depth: 0,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        };
        seed.extend_to_horizon(depth_right, depth_left)
    }

    fn from_edges(rooted: bool, edges: &[(u32, u32)], rule: Option<ExtensionRule>) -> Result<DirectedTree> {
        if edges.is_empty() {
            return Err(Error::InvalidSpec("edge list is empty".into()));
        }
        let mut max_id = 0u32;
        for &(p, c) in edges {
            max_id = max_id.max(p).max(c);
        }
        let n = max_id as usize + 1;
        if edges.len() != n - 1 {
            // a connected tree on n vertices has exactly n-1 edges
            return Err(Error::InvalidSpec(format!(
                "{} edges cannot form a tree on {} dense vertex ids",
                edges.len(),
                n
            )));
        }
        let mut parent = vec![NO_PARENT; n];
        let mut kid_count = vec![0u32; n];
        for &(p, c) in edges {
            if p == c {
                return Err(Error::CycleDetected(VertexId(c)));
            }
            if parent[c as usize] != NO_PARENT {
                return Err(Error::InvalidSpec(format!("vertex {c} has two parents")));
            }
            parent[c as usize] = p;
            kid_count[p as usize] += 1;
        }
        let mut top = None;
        for (v, &p) in parent.iter().enumerate() {
            if p == NO_PARENT {
                match top {
                    None => top = Some(v as u32),
                    Some(t) => return Err(Error::MultipleRoots(VertexId(t), VertexId(v as u32))),
                }
            }
        }
        let top = top.ok_or(Error::CycleDetected(VertexId(0)))?;
        if rooted && top != 0 {
            return Err(Error::InvalidSpec(
                "rooted tree must have vertex 0 as its root".into(),
            ));
        }
        // children grouped per parent, in edge-list order
        let mut child_off = vec![0u32; n];
        let mut acc = 0u32;
        for v in 0..n {
            child_off[v] = acc;
            acc += kid_count[v];
        }
        let mut fill = child_off.clone();
        let mut pool = vec![0u32; edges.len()];
        for &(p, c) in edges {
            pool[fill[p as usize] as usize] = c;
            fill[p as usize] += 1;
        }
        // generations by BFS from the top; detect cycles/disconnection
        let mut gen = vec![i32::MIN; n];
        gen[top as usize] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(top);
        let mut seen = 1usize;
        while let Some(v) = queue.pop_front() {
            let off = child_off[v as usize] as usize;
            let len = kid_count[v as usize] as usize;
            for &c in &pool[off..off + len] {
                gen[c as usize] = gen[v as usize] + 1;
                seen += 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            // some vertex never reached the top: a cycle or a second component
            let stray = (0..n).find(|&v| gen[v] == i32::MIN).unwrap() as u32;
            let mut walk = stray;
            let mut steps = 0usize;
            while steps <= n {
                let p = parent[walk as usize];
                if p == NO_PARENT {
                    return Err(Error::Disconnected(VertexId(stray)));
                }
                if p == stray {
                    return Err(Error::CycleDetected(VertexId(stray)));
                }
                walk = p;
                steps += 1;
            }
            return Err(Error::CycleDetected(VertexId(stray)));
        }
        // shift so the anchor (vertex 0) sits at generation 0
        let shift = gen[0];
        for g in gen.iter_mut() {
            *g -= shift;
        }
        let right_depth = *gen.iter().max().unwrap();
        let left_depth = (-gen[top as usize]) as u32;
        let frontier: Vec<bool> = (0..n).map(|v| rule.is_some() && kid_count[v] == 0).collect();
        Ok(DirectedTree {
            parent,
            child_off,
            child_len: kid_count,
            pool,
            gen,
            frontier,
            rooted,
            rule,
            left_depth,
            right_depth,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn anchor(&self) -> VertexId {
        VertexId(0)
    }

    pub fn is_rooted(&self) -> bool {
        self.rooted
    }

    pub fn rule(&self) -> Option<&ExtensionRule> {
        self.rule.as_ref()
    }

    pub fn right_depth(&self) -> i32 {
        self.right_depth
    }

    pub fn left_depth(&self) -> u32 {
        self.left_depth
    }

    pub fn set_vertex_budget(&mut self, budget: usize) {
        self.vertex_budget = budget;
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.parent.len()
    }

    pub fn parent_of(&self, v: VertexId) -> Option<VertexId> {
        let p = self.parent[v.index()];
        (p != NO_PARENT).then_some(VertexId(p))
    }

    pub fn child_count(&self, v: VertexId) -> usize {
        self.child_len[v.index()] as usize
    }

    pub fn child_at(&self, v: VertexId, i: usize) -> VertexId {
        VertexId(self.pool[self.child_off[v.index()] as usize + i])
    }

    pub fn children(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let off = self.child_off[v.index()] as usize;
        let len = self.child_len[v.index()] as usize;
        self.pool[off..off + len].iter().map(|&c| VertexId(c))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.parent.len() as u32).map(VertexId)
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.frontier[v.index()]
    }

    /// A childless vertex that is not a frontier vertex.
    pub fn is_leaf(&self, v: VertexId) -> bool {
        !self.frontier[v.index()] && self.child_len[v.index()] == 0
    }

    pub fn first_leaf(&self) -> Option<VertexId> {
        self.vertices().find(|&v| self.is_leaf(v))
    }

    /// The parentless materialized vertex (the root when rooted, else the
    /// deepest materialized ancestor of the anchor).
    pub fn top(&self) -> VertexId {
        let mut v = self.anchor();
        while let Some(p) = self.parent_of(v) {
            v = p;
        }
        v
    }

    /// Generation index of `v` relative to the anchor.
    pub fn generation_index(&self, v: VertexId) -> i32 {
        self.gen[v.index()]
    }

    /// `prt^n(v)`. Returns `Ok(None)` when a rooted tree runs out of
    /// ancestors; running over the left truncation of an unrooted tree is an
    /// error, since the ancestor exists but is not materialized.
    pub fn ancestor(&self, v: VertexId, n: u32) -> Result<Option<VertexId>> {
        let mut cur = v;
        for step in 0..n {
            match self.parent_of(cur) {
                Some(p) => cur = p,
                None => {
                    if self.rooted {
                        return Ok(None);
                    }
                    return Err(Error::TruncationExceeded {
                        needed: n,
                        available: step,
                    });
                }
            }
        }
        Ok(Some(cur))
    }

    /// `X^n(v)`, the n-fold descendant set. Fails with `FrontierHit` when the
    /// depth-n ball below `v` is not materialized.
    pub fn descendants(&self, v: VertexId, n: u32) -> Result<Vec<VertexId>> {
        let mut level = vec![v];
        for _ in 0..n {
            let mut next = Vec::new();
            for &u in &level {
                if self.is_frontier(u) {
                    return Err(Error::FrontierHit(u));
                }
                next.extend(self.children(u));
            }
            level = next;
        }
        Ok(level)
    }

    /// `|X^n(v)|` without materializing the set.
    pub fn descendant_count(&self, v: VertexId, n: u32) -> Result<u64> {
        Ok(self.descendants(v, n)?.len() as u64)
    }

    /// Complete materialized depth below `v`: every `X^n(v)` with
    /// `n <= subtree_depth(v)` is materialized. `None` means unbounded
    /// (explicit tree without a rule, fully known).
    pub fn subtree_depth(&self, v: VertexId) -> Option<u32> {
        self.rule.as_ref()?;
        Some((self.right_depth - self.gen[v.index()]).max(0) as u32)
    }

    /// Extend to the absolute generation window `[-left, right]`: every
    /// generation `< right` below the truncation top becomes non-frontier and
    /// `prt^left(v0)` is materialized. Within a single call the right side is
    /// extended first, one generation at a time, then the left side one
    /// ancestor generation at a time (each new top reveals its other
    /// subtrees down to the right horizon); children are numbered in rule
    /// order, generations in breadth-first order. Identical call sequences
    /// produce identical numbering.
    pub fn extend_to_horizon(&self, right: i32, left: u32) -> Result<DirectedTree> {
        let mut t = self.clone();
        if t.rule.is_none() {
            if right > t.right_depth || (!t.rooted && left > t.left_depth) {
                return Err(Error::FrontierHit(t.top()));
            }
            return Ok(t);
        }
        // right phase
        while t.right_depth < right {
            let g = t.right_depth;
            let layer: Vec<u32> = (0..t.parent.len() as u32)
                .filter(|&v| t.frontier[v as usize] && t.gen[v as usize] == g)
                .collect();
            t.expand_layer(&layer)?;
            t.right_depth += 1;
        }
        // left phase
        if !t.rooted {
            while t.left_depth < left {
                t.push_top()?;
            }
        }
        Ok(t)
    }

    /// Expand every frontier vertex in `layer`, materializing one generation.
    fn expand_layer(&mut self, layer: &[u32]) -> Result<()> {
        for &v in layer {
            debug_assert!(self.frontier[v as usize]);
            let g = self.gen[v as usize] as i64;
            let rule = self.rule.as_ref().unwrap();
            let out = rule.outdegree(VertexId(v), g)?;
            if self.parent.len() + out as usize > self.vertex_budget {
                return Err(Error::VertexBudget {
                    budget: self.vertex_budget,
                    generation: (g + 1) as i32,
                });
            }
            let off = self.pool.len() as u32;
            self.child_off[v as usize] = off;
            self.child_len[v as usize] = out;
            self.frontier[v as usize] = false;
            for _ in 0..out {
                let id = self.parent.len() as u32;
                self.pool.push(id);
                self.parent.push(v);
                self.child_off.push(0);
                self.child_len.push(0);
                self.gen.push((g + 1) as i32);
                self.frontier.push(true);
            }
        }
        Ok(())
    }

    /// Materialize one more ancestor generation of the anchor, revealing the
    /// new top's other subtrees down to the current right horizon.
    fn push_top(&mut self) -> Result<()> {
        let old_top = self.top();
        let new_gen = self.gen[old_top.index()] - 1;
        let rule = self.rule.as_ref().unwrap().clone();
        let id = self.parent.len() as u32;
        self.parent.push(NO_PARENT);
        self.child_off.push(0);
        self.child_len.push(0);
        self.gen.push(new_gen);
        self.frontier.push(false);
        self.parent[old_top.index()] = id;
        let out = rule.outdegree(VertexId(id), new_gen as i64)?;
        if out == 0 {
            return Err(Error::ZeroOutdegreeRule(new_gen));
        }
        // children: the old top first, then the newly revealed siblings
        let off = self.pool.len() as u32;
        self.pool.push(old_top.0);
        let mut fresh = Vec::new();
        for _ in 1..out {
            let sid = self.parent.len() as u32;
            if self.parent.len() + 1 > self.vertex_budget {
                return Err(Error::VertexBudget {
                    budget: self.vertex_budget,
                    generation: new_gen + 1,
                });
            }
            self.pool.push(sid);
            self.parent.push(id);
            self.child_off.push(0);
            self.child_len.push(0);
            self.gen.push(new_gen + 1);
            self.frontier.push(true);
            fresh.push(sid);
        }
        self.child_off[id as usize] = off;
        self.child_len[id as usize] = out;
        self.left_depth += 1;
        // reveal the fresh subtrees down to the right horizon
        let mut layer = fresh;
        let mut g = new_gen + 1;
        while !layer.is_empty() && g < self.right_depth {
            self.expand_layer(&layer)?;
            let mut next = Vec::new();
            for &v in &layer {
                let off = self.child_off[v as usize] as usize;
                let len = self.child_len[v as usize] as usize;
                next.extend_from_slice(&self.pool[off..off + len]);
            }
            layer = next;
            g += 1;
        }
        Ok(())
    }

    /// Structural predicates, decided exactly where the rule is symbolic and
    /// up to the horizon otherwise.
    pub fn classify(&self) -> StructureReport {
        let rooted = self.rooted;
        let declarative = matches!(
            self.rule,
            Some(ExtensionRule::Constant(_))
                | Some(ExtensionRule::Symmetric(_))
                | Some(ExtensionRule::Alternating(_))
        );
        let has_leaf = self.first_leaf().is_some();
        let leafless = if self.rule.is_none() || declarative {
            Claim::Exact(!has_leaf)
        } else {
            Claim::AtHorizon(!has_leaf)
        };

        // symmetric: outdegree constant on each materialized generation
        let mut per_gen: std::collections::BTreeMap<i32, u32> = std::collections::BTreeMap::new();
        let mut observed_symmetric = true;
        let mut max_out = 0u32;
        for v in self.vertices() {
            if self.is_frontier(v) {
                continue;
            }
            let d = self.child_len[v.index()];
            max_out = max_out.max(d);
            match per_gen.entry(self.gen[v.index()]) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(d);
                }
                std::collections::btree_map::Entry::Occupied(e) => {
                    if *e.get() != d {
                        observed_symmetric = false;
                    }
                }
            }
        }
        let symmetric = if declarative || self.rule.is_none() {
            Claim::Exact(observed_symmetric)
        } else {
            Claim::AtHorizon(observed_symmetric)
        };

        let (max_outdegree, max_outdegree_exact) = match &self.rule {
            Some(ExtensionRule::Constant(n)) => (Degree::Finite(*n), true),
            Some(ExtensionRule::Symmetric(p)) => {
                let geometric_growth = matches!(p.right_tail, Tail::Geometric(f) if f >= 2)
                    || matches!(p.left_tail, Tail::Geometric(f) if f >= 2);
                if geometric_growth {
                    (Degree::Unbounded, true)
                } else {
                    let mut m = max_out;
                    for &v in p.right.iter().chain(p.left.iter()) {
                        m = m.max(v);
                    }
                    (Degree::Finite(m), true)
                }
            }
            Some(ExtensionRule::Alternating(p)) => (Degree::Finite(p.low.max(p.high)), true),
            Some(ExtensionRule::Procedural(_)) => (Degree::Finite(max_out), false),
            None => (Degree::Finite(max_out), true),
        };

        let free_left_end = if rooted {
            None
        } else {
            Some(match &self.rule {
                Some(ExtensionRule::Constant(n)) => Claim::Exact(*n == 1),
                Some(ExtensionRule::Symmetric(p)) => match p.left_cycle() {
                    Some((_, cyc)) => Claim::Exact(cyc.iter().all(|&g| g == 1)),
                    None => Claim::Exact(false),
                },
                Some(ExtensionRule::Alternating(p)) => Claim::Exact(p.low == 1),
                _ => {
                    // observed: all materialized generations <= 0 singletons
                    let mut singleton = true;
                    let mut sizes: std::collections::BTreeMap<i32, u32> = Default::default();
                    for v in self.vertices() {
                        *sizes.entry(self.gen[v.index()]).or_insert(0) += 1;
                    }
                    for (&g, &s) in sizes.iter() {
                        if g <= 0 && s > 1 {
                            singleton = false;
                        }
                    }
                    Claim::AtHorizon(singleton)
                }
            })
        };

        let branchless_z = !rooted
            && max_outdegree_exact
            && matches!(max_outdegree, Degree::Finite(1));

        StructureReport {
            rooted,
            leafless,
            symmetric,
            free_left_end,
            max_outdegree,
            max_outdegree_exact,
            branchless_z,
            vertices: self.vertex_count(),
            right_depth: self.right_depth,
            left_depth: self.left_depth,
        }
    }

    /// Reverse the orientation of a branchless unrooted truncation (the tree
    /// Z): parents become children. Returns the reversed tree and the vertex
    /// mapping old id -> new id.
    pub fn reversed_path(&self) -> Result<(DirectedTree, Vec<VertexId>)> {
        let report = self.classify();
        if !report.branchless_z {
            return Err(Error::InvalidSpec(
                "orientation reversal only applies to branchless unrooted trees".into(),
            ));
        }
        // The path runs top -> ... -> deepest; reversing swaps the ends.
        // New ids: anchor keeps id 0; new generations are the negated old ones.
        let n = self.vertex_count();
        let mut by_gen: Vec<(i32, u32)> = self.vertices().map(|v| (self.gen[v.index()], v.0)).collect();
        by_gen.sort_unstable();
        // old chain in generation order
        let chain: Vec<u32> = by_gen.iter().map(|&(_, v)| v).collect();
        let anchor_pos = chain
            .iter()
            .position(|&v| v == 0)
            .expect("anchor on chain");
        // reversed chain: old deepest first
        let rev: Vec<u32> = chain.iter().rev().copied().collect();
        let new_anchor_pos = rev.len() - 1 - anchor_pos;
        // assign new ids: anchor = 0, then remaining in reversed-BFS order
        // (right side of the anchor ascending, then left side).
        let mut map = vec![VertexId(0); n];
        let mut next = 1u32;
        map[rev[new_anchor_pos] as usize] = VertexId(0);
        for (i, &old) in rev.iter().enumerate() {
            if i == new_anchor_pos {
                continue;
            }
            map[old as usize] = VertexId(next);
            next += 1;
        }
        let mut parent = vec![NO_PARENT; n];
        let mut child_off = vec![0u32; n];
        let mut child_len = vec![0u32; n];
        let mut pool = vec![0u32; n - 1];
        let mut gen = vec![0i32; n];
        for (i, &old) in rev.iter().enumerate() {
            let nid = map[old as usize].0 as usize;
            gen[nid] = (i as i32) - (new_anchor_pos as i32);
            if i > 0 {
                parent[nid] = map[rev[i - 1] as usize].0;
            }
        }
        let mut acc = 0u32;
        for i in 0..rev.len() {
            let nid = map[rev[i] as usize].0 as usize;
            child_off[nid] = acc;
            if i + 1 < rev.len() {
                child_len[nid] = 1;
                pool[acc as usize] = map[rev[i + 1] as usize].0;
                acc += 1;
            }
        }
        let frontier = vec![false; n];
        let left_depth = new_anchor_pos as u32;
        let right_depth = (rev.len() - 1 - new_anchor_pos) as i32;
        let tree = DirectedTree {
            parent,
            child_off,
            child_len,
            pool,
            gen,
            frontier,
            rooted: false,
            rule: self.rule.as_ref().map(|_| ExtensionRule::Constant(1)),
            left_depth,
            right_depth,
            vertex_budget: self.vertex_budget,
        };
        Ok((tree, map))
    }
}
