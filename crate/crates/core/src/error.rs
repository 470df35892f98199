use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("max degree {degree} with lambda {lambda} needs 2*d*lambda = {needed} slots, but delta is {delta}")]
    DegreeTooHigh {
        degree: usize,
        lambda: usize,
        delta: usize,
        needed: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is disconnected")]
    Disconnected,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("round {round}: local envelope {sender} -> {receiver} does not ride a declared local edge")]
    IllegalLocalEdge {
        round: u64,
        sender: NodeId,
        receiver: NodeId,
    },
    #[error("round {round}: envelope from {sender} addressed to unknown node {receiver}")]
    UnknownReceiver {
        round: u64,
        sender: NodeId,
        receiver: NodeId,
    },
    #[error("round {round}: envelope in outbox of {slot} claims sender {sender}")]
    SenderMismatch {
        round: u64,
        slot: NodeId,
        sender: NodeId,
    },
    #[error("round {round}: payload carries {ids} ids, limit is {limit}")]
    PayloadTooLarge { round: u64, ids: usize, limit: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("exact conductance needs n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is not regular")]
    NotRegular,
}

/// Errors surfaced by the multi-stage pipelines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("bad spec: {0}")]
    BadSpec(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}
