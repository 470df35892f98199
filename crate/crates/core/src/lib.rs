//! Overlay construction by random-walk graph evolutions, a synchronous-round
//! simulator to run it on, and hybrid-model graph algorithms built on top.

pub mod error;
pub mod experiment;
pub mod expander;
pub mod graph;
pub mod hybrid;
pub mod metrics;
pub mod oracle;
pub mod profile;
pub mod rng;
pub mod sampling;
pub mod sim;
pub mod topology;
pub mod tree;

pub use error::{GraphError, MetricsError, PipelineError, SimError};
pub use graph::{BenignParams, KnowledgeGraph, MultiGraph, NodeId};
