//! Multi-step Colonel Blotto on directed graphs.
//!
//! Two players hold integer resources on the nodes of a directed graph and
//! move them simultaneously along edges. After every move the player who
//! holds more nodes (by per-node majority) wins; a tie continues the game.
//!
//! The crate provides the exact valid-action machinery ([`graph`]), the
//! environment ([`env`]), baseline policies ([`policies`]), DQN and PPO
//! trainers written from scratch ([`learn`]) and brute-force references for
//! testing ([`oracle`]).
//!
//! The learning code is generic over the floating-point type; see
//! [`Scalar`] and the aliases below.

pub mod env;
pub mod error;
pub mod graph;
pub mod graphs;
pub mod learn;
pub mod oracle;
pub mod policies;
pub mod provenance;
pub mod rng;
pub mod scalar;
pub mod trace;

pub use env::{reset, step, GameConfig, GameState, InitScheme, Outcome, Seat, StepRecord};
pub use error::{GragError, Result};
pub use graph::{
    action_index, apply_action, decode_action, enumerate_valid_actions, is_valid_action, ActionDisplacementMatrix,
    ActionMask, ActionVector, Graph, ResourceDistribution,
};
pub use graphs::{load_named_graph, preset_init};
pub use learn::dqn::{train_dqn, DqnConfig};
pub use learn::iterate::greedy_iteration;
pub use learn::ppo::{train_ppo, PpoConfig};
pub use learn::report::TrainReport;
pub use learn::selfplay::self_play_train;
pub use oracle::{evaluate_matchup, MatchupStats};
pub use policies::{Observation, PolicyHandle};
pub use scalar::Scalar;

pub type Mlp64 = learn::mlp::Mlp<f64>;
pub type Mlp32 = learn::mlp::Mlp<f32>;
pub type Policy64 = PolicyHandle<f64>;
pub type Policy32 = PolicyHandle<f32>;
pub type Transition64 = learn::replay::Transition<f64>;
pub type ReplayBuffer64 = learn::replay::ReplayBuffer<f64>;
