//! Weighted shift operators on directed trees.
//!
//! The crate materializes directed trees as finite truncations with extension
//! rules, evaluates weighted forward/backward shifts and their exact operator
//! norms on weighted `l^p` and `c0` spaces, certifies hypercyclicity and
//! mixing through closed-form rules and finite-horizon diagnostics, audits
//! the approximate-right-inverse witnesses behind those certifications, and
//! constructs mixing and hypercyclic-non-mixing weight families on arbitrary
//! leafless trees.

pub mod error;
pub mod tree;
pub mod spaces;
pub mod weights;
pub mod extremal;
pub mod exact;
pub mod shift;
pub mod dynamics;
pub mod witness;
pub mod construct;

pub use construct::{
    mixing_weights, nonmixing_weights, verify_transcript, Construction, ConstructionTranscript,
    VerifyReport,
};
pub use dynamics::{
    certify, certify_forward, certify_rolewicz, certify_symmetric, lambda_big, rooted_diagnostic,
    sufficient_report, unrooted_diagnostics, CertifyPolicy, DiagnosticSeries, Evidence, Property,
    Status, SufficiencyReport, Verdict,
};
pub use error::{Error, Result};
pub use extremal::{ExtremalMode, ExtremalProblem, ExtremalSolution};
pub use shift::{
    adjoint_residual, apply_backward, apply_forward, conjugacy_residual, lambda_from_mu,
    mu_from_lambda, Boundedness, Direction, NormReport, ShiftOperator,
};
pub use spaces::{pairing, DualExp, FinVector, PExp, SpaceKind, SpaceSpec};
pub use tree::{
    AlternatingProfile, Claim, Degree, DirectedTree, ExtensionRule, OutdegreeProfile, RuleSpec,
    StructureReport, Tail, TreeSpec, VertexId,
};
pub use weights::{path_product, ParsedWeights, WeightFamily, WeightProfile, WeightSpec};
pub use witness::{
    build_i_witness, build_r_witness, criterion_audit, AuditReport, Branch, Representation,
    WitnessBundle,
};
