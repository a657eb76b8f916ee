//! Training summaries written next to checkpoints.

use serde::{Deserialize, Serialize};

use crate::env::Seat;
use crate::oracle::MatchupStats;

/// One periodic evaluation of the learner(s) against the training opponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub env_steps: usize,
    pub stats: MatchupStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub env_steps: usize,
    pub seat: Seat,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub algorithm: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub learners: Vec<Seat>,
    pub env_steps: usize,
    pub episodes: usize,
    pub updates: usize,
    pub evaluations: Vec<EvalPoint>,
    pub losses: Vec<LossPoint>,
    /// Excluded from equality checks between reruns.
    pub wall_clock_secs: f64,
}

impl TrainReport {
    pub fn new(algorithm: &str, config_hash: String, seed: u64, learners: Vec<Seat>) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            tool_version: crate::provenance::TOOL_VERSION.to_string(),
            config_hash,
            seed,
            learners,
            env_steps: 0,
            episodes: 0,
            updates: 0,
            evaluations: Vec::new(),
            losses: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn final_eval(&self) -> Option<&MatchupStats> {
        self.evaluations.last().map(|e| &e.stats)
    }

    /// Copy with the timing field zeroed, for rerun comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_clock_secs: 0.0, ..self.clone() }
    }
}
