use thiserror::Error;

use crate::graph::NodeId;

/// Errors raised by network construction, measurement and rewriting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("graph contains a cycle through node {0}")]
    Cyclic(NodeId),

    #[error("input has length {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bias coordinate x[0] must equal 1, got {0}")]
    BiasCoordinate(f64),

    #[error("invalid norm parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires a positively homogeneous activation, got {0}")]
    NonHomogeneous(&'static str),

    #[error("operation requires depth {expected}, network has depth {got}")]
    DepthMismatch { expected: usize, got: usize },

    #[error("layer {0} has zero group norm")]
    ZeroNormLayer(usize),

    #[error("network is not sublayered: edge {src} -> {dst} skips a layer")]
    NotSublayered { src: NodeId, dst: NodeId },

    #[error("node {0} is not on any input-output path")]
    DeadNode(NodeId),

    #[error("size cap exceeded: {nodes} nodes > {cap}")]
    SizeCap { nodes: usize, cap: usize },

    #[error("too many points for exact enumeration: m = {m} > {max}")]
    TooManyPoints { m: usize, max: usize },

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("parameter domain violated: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, NetError>;
