use crate::tree::VertexId;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list contains a cycle through vertex {0}")]
    CycleDetected(VertexId),
    #[error("vertices {0} and {1} both lack a parent")]
    MultipleRoots(VertexId, VertexId),
    #[error("vertex {0} is not connected to the rest of the tree")]
    Disconnected(VertexId),
    #[error("extension rule assigns outdegree 0 at generation {0}")]
    ZeroOutdegreeRule(i32),
    #[error("walk needs {needed} ancestor generations but only {available} are materialized")]
    TruncationExceeded { needed: u32, available: u32 },
    #[error("vertex {0} is on the frontier; extend the tree before descending past it")]
    FrontierHit(VertexId),
    #[error("vertex {descendant} is not a descendant of {ancestor}")]
    NotADescendant {
        ancestor: VertexId,
        descendant: VertexId,
    },
    #[error("operation requires a constant weight family")]
    NotConstantWeight,
    #[error("operation requires a symmetric tree rule and a symmetric weight profile")]
    NotSymmetric,
    #[error("tree has a leaf at vertex {0}")]
    HasLeaf(VertexId),
    #[error("{stages} stages need generation depth {needed}, beyond the allowed horizon {horizon}")]
    HorizonExhausted {
        stages: u32,
        needed: u32,
        horizon: u32,
    },
    #[error("operator is unbounded on the requested space")]
    UnboundedOperator,
    #[error("vertex budget {budget} exceeded while materializing generation {generation}")]
    VertexBudget { budget: usize, generation: i32 },
    #[error("invalid input: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
