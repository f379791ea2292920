use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("invalid weight {weight} on edge ({u}, {v}); weights must be finite and non-negative")]
    InvalidWeight { u: usize, v: usize, weight: f64 },

    #[error("graph has {graph} nodes but partition covers {partition}")]
    NodeCountMismatch { graph: usize, partition: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("modularity is undefined on a graph with zero total weight")]
    EmptyGraph,

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate partition for density estimation: {0}")]
    DegeneratePartition(String),

    #[error("background density is 1; the grounded probability cannot be recovered")]
    SaturatedBackground,

    #[error("expected exactly 2 layers, got {0}")]
    LayerCount(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
