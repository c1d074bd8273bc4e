//! Norm-based capacity measures for feedforward ReLU networks over DAGs,
//! together with the rescalings, graph rewrites, explicit constructions and
//! Rademacher-complexity estimators built on them.

pub mod constructions;
pub mod error;
pub mod graph;
pub mod norms;
pub mod rademacher;
pub mod rebalance;
pub mod sample;
pub mod transforms;

pub use error::{NetError, Result};
pub use graph::{Activation, Edge, Forward, LayeredNet, Matrix, Network, Node, NodeId, Role};
pub use norms::{NormParams, NormReport};
