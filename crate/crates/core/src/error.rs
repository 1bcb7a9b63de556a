use thiserror::Error;

use crate::orientation::{EdgeKey, EdgeUid, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {vertex} outside universe of size {n}")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge {0} is already live")]
    DuplicateEdge(EdgeKey),
    #[error("edge {0} is not live")]
    MissingEdge(EdgeKey),
    #[error("no live edge with id {0:?}")]
    MissingUid(EdgeUid),
    #[error("label {0} outside 0..=3")]
    LabelOutOfRange(u8),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("token bundle contract violated: {0}")]
    BundleContract(String),
    #[error("no ladder level reported a low-density verdict")]
    LadderExhausted,
    #[error("palette of vertex {0} has no color free of its out-neighbors' palettes")]
    PaletteExhausted(VertexId),
    #[error("density upper bound {rho_max} violated: orientation reported high density")]
    DensityContract { rho_max: f64 },
    #[error("graph has {n} vertices; exhaustive oracle is limited to {limit}")]
    SizeLimit { n: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
