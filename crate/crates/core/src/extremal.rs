//! The reverse-Hölder extremal problem: minimize a weighted norm over the
//! unit simplex `{x >= 0, sum x_j = 1}`. Closed-form infima and minimizers for
//! the three modes used by the witness constructions.

use crate::error::{Error, Result};
use crate::spaces::{powq, FinVector, PExp, SpaceKind};
use crate::tree::VertexId;
use serde::Serialize;

/// Which norm is minimized subject to `||x||_1 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExtremalMode {
    /// `sum |x_j mu_j|` — infimum is `min |mu_j|`
    P1,
    /// `(sum |x_j mu_j|^p)^{1/p}` for `1 < p < infinity`
    P(PExp),
    /// `sup |x_j mu_j|`
    Sup,
}

impl ExtremalMode {
    pub fn for_space(kind: SpaceKind) -> Result<ExtremalMode> {
        match kind {
            SpaceKind::Lp(p) if p.is_one() => Ok(ExtremalMode::P1),
            SpaceKind::Lp(p) => Ok(ExtremalMode::P(p)),
            SpaceKind::C0 => Ok(ExtremalMode::Sup),
            SpaceKind::LInf => Err(Error::InvalidSpec(
                "extremal mode undefined for linf".into(),
            )),
        }
    }

    /// The dual exponent used by the closed forms (p* for mode P, 1 for Sup).
    pub fn dual_value(&self) -> Option<f64> {
        match self {
            ExtremalMode::P1 => None,
            ExtremalMode::P(p) => Some(p.value() / (p.value() - 1.0)),
            ExtremalMode::Sup => Some(1.0),
        }
    }
}

/// A finite extremal problem over nonzero scalars `mu_j`.
#[derive(Clone, Debug)]
pub struct ExtremalProblem {
    entries: Vec<(VertexId, f64)>,
    mode: ExtremalMode,
    /// set when the index set is a truncation of a countable one, in which
    /// case the P1 minimum may shrink on extension
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct ExtremalSolution {
    pub vector: FinVector,
    pub value: f64,
    /// the P1 infimum over a truncated countable set need not be attained
    pub eps_minimizer: bool,
}

impl ExtremalProblem {
    pub fn new(entries: Vec<(VertexId, f64)>, mode: ExtremalMode) -> Result<ExtremalProblem> {
        if entries.is_empty() {
            return Err(Error::InvalidSpec("extremal problem needs a nonempty index set".into()));
        }
        if entries.iter().any(|&(_, m)| m == 0.0 || !m.is_finite()) {
            return Err(Error::InvalidSpec("extremal scalars must be nonzero finite".into()));
        }
        if let ExtremalMode::P(p) = mode {
            if p.is_one() {
                return Err(Error::InvalidSpec("mode P needs p > 1; use P1".into()));
            }
        }
        Ok(ExtremalProblem { entries, mode, truncated: false })
    }

    pub fn entries(&self) -> &[(VertexId, f64)] {
        &self.entries
    }

    pub fn mode(&self) -> ExtremalMode {
        self.mode
    }

    /// The objective at a point of the simplex (the point is normalized to
    /// unit mass first, so any nonnegative nonzero `x` can be passed).
    pub fn objective(&self, x: &FinVector) -> f64 {
        let mass = x.mass();
        assert!(mass > 0.0, "objective needs a nonzero point");
        match self.mode {
            ExtremalMode::P1 => self
                .entries
                .iter()
                .map(|&(v, m)| (x.get(v) / mass * m).abs())
                .sum(),
            ExtremalMode::P(p) => {
                let s: f64 = self
                    .entries
                    .iter()
                    .map(|&(v, m)| powq((x.get(v) / mass * m).abs(), p))
                    .sum();
                s.powf(1.0 / p.value())
            }
            ExtremalMode::Sup => self
                .entries
                .iter()
                .map(|&(v, m)| (x.get(v) / mass * m).abs())
                .fold(0.0, f64::max),
        }
    }

    /// The exact infimum over the unit simplex.
    pub fn infimum(&self) -> f64 {
        match self.mode {
            ExtremalMode::P1 => self
                .entries
                .iter()
                .map(|&(_, m)| m.abs())
                .fold(f64::INFINITY, f64::min),
            ExtremalMode::P(p) => {
                let q = p.value() / (p.value() - 1.0);
                let s: f64 = self.entries.iter().map(|&(_, m)| m.abs().powf(-q)).sum();
                s.powf(-1.0 / q)
            }
            ExtremalMode::Sup => {
                let s: f64 = self.entries.iter().map(|&(_, m)| 1.0 / m.abs()).sum();
                 1.0 / s
            }
        }
    }

    /// A nonnegative unit-mass minimizer attaining the infimum.
    ///
    /// Mode P: `x_j` proportional to `|mu_j|^{-p*}`; mode Sup:
    /// `x_j = |mu_j|^{-1} / sum_k |mu_k|^{-1}`; mode P1: the basis vector at
    /// the smallest vertex id attaining `min |mu_j|`.
    pub fn minimizer(&self) -> ExtremalSolution {
        let vector = match self.mode {
            ExtremalMode::P1 => {
                let mut best: Option<(VertexId, f64)> = None;
                for &(v, m) in &self.entries {
                    let a = m.abs();
                    match best {
                        None => best = Some((v, a)),
                        Some((bv, ba)) => {
                            if a < ba || (a == ba && v < bv) {
                                best = Some((v, a));
                            }
                        }
                    }
                }
                FinVector::unit(best.unwrap().0)
            }
            ExtremalMode::P(p) => {
                let q = p.value() / (p.value() - 1.0);
                let raw: Vec<(VertexId, f64)> = self
                    .entries
                    .iter()
                    .map(|&(v, m)| (v, m.abs().powf(-q)))
                    .collect();
                let total: f64 = raw.iter().map(|&(_, w)| w).sum();
                FinVector::from_entries(raw.into_iter().map(|(v, w)| (v, w / total)))
            }
            ExtremalMode::Sup => {
                let raw: Vec<(VertexId, f64)> = self
                    .entries
                    .iter()
                    .map(|&(v, m)| (v, 1.0 / m.abs()))
                    .collect();
                let total: f64 = raw.iter().map(|&(_, w)| w).sum();
                FinVector::from_entries(raw.into_iter().map(|(v, w)| (v, w / total)))
            }
        };
        ExtremalSolution {
            value: self.infimum(),
            eps_minimizer: self.truncated && self.mode == ExtremalMode::P1,
            vector,
        }
    }
}
