use thiserror::Error;

use crate::env::Seat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GragError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid resource distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("resource index {index} out of range for {len} resources")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid action from {seat}: {reason}")]
    InvalidPlayerAction { seat: Seat, reason: String },
    #[error("enumerating {count} actions exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("action index overflow: {n}^{m} does not fit in usize")]
    IndexOverflow { n: usize, m: usize },
    #[error("{real} real resources exceed the padded length {total}")]
    InvalidPadding { real: usize, total: usize },
    #[error("infeasible initialization: {0}")]
    InfeasibleScheme(String),
    #[error("step called on a terminal state")]
    StepAfterTerminal,
    #[error("unknown graph `{0}`")]
    UnknownGraph(String),
    #[error("numerical fault: {0}")]
    NumericalFault(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GragError>;
