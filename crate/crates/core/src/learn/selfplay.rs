//! Two independent DQN learners sharing one game with opposite rewards.

use crate::env::{GameConfig, Seat};
use crate::error::Result;
use crate::learn::dqn::{dqn_config_hash, run_dqn_seats, DqnConfig, SeatRole};
use crate::learn::mlp::Mlp;
use crate::learn::report::TrainReport;
use crate::policies::PolicyHandle;
use crate::scalar::Scalar;

/// Both seats learn; each sees the state from its own side and is rewarded
/// with its own signed outcome.
pub fn self_play_train<T: Scalar>(game: &GameConfig, cfg: &DqnConfig, seed: u64) -> Result<(Mlp<T>, Mlp<T>, TrainReport)> {
    let hash = dqn_config_hash::<T>(cfg, game, &["selfplay".to_string()], seed);
    let run = run_dqn_seats(cfg, game, [SeatRole::Learner, SeatRole::Learner], seed, hash)?;
    let [p1, p2] = run.nets;
    Ok((p1.expect("P1 learns"), p2.expect("P2 learns"), run.report))
}

/// Self-play with `frozen` never updated and acting uniformly at random.
/// Returns the network of the remaining learner.
pub fn self_play_train_frozen<T: Scalar>(
    game: &GameConfig,
    cfg: &DqnConfig,
    seed: u64,
    frozen: Seat,
) -> Result<(Mlp<T>, TrainReport)> {
    let hash = dqn_config_hash::<T>(cfg, game, &[PolicyHandle::<T>::Random.fingerprint()], seed);
    let mut roles = [SeatRole::Learner, SeatRole::Learner];
    roles[frozen.index()] = SeatRole::Fixed(PolicyHandle::Random);
    let run = run_dqn_seats(cfg, game, roles, seed, hash)?;
    let [a, b] = run.nets;
    Ok((a.or(b).expect("one learner"), run.report))
}
