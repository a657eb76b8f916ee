//! Greedy-policy iteration: each new Q-network is trained against the frozen
//! greedy policy of the previous one.

use crate::env::GameConfig;
use crate::error::{GragError, Result};
use crate::learn::dqn::{train_dqn, DqnConfig};
use crate::learn::mlp::Mlp;
use crate::learn::report::TrainReport;
use crate::policies::PolicyHandle;
use crate::rng::derive_seed;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct GreedyIteration<T> {
    /// `Q_0 ..= Q_k`.
    pub networks: Vec<Mlp<T>>,
    /// Report of the run that produced each network.
    pub reports: Vec<TrainReport>,
}

impl<T: Scalar> GreedyIteration<T> {
    /// Frozen greedy policy `pi_i` over `Q_i`.
    pub fn greedy(&self, i: usize) -> PolicyHandle<T> {
        PolicyHandle::greedy(self.networks[i].clone())
    }
}

/// Seed of stage `i`; stage 0 uses the master seed so that `Q_0` is exactly
/// `train_dqn` against the random policy.
pub fn stage_seed(seed: u64, stage: usize) -> u64 {
    if stage == 0 {
        seed
    } else {
        derive_seed(seed, stage as u64)
    }
}

/// `Q_0` against the random policy, then `Q_{i+1}` against greedy `pi_i`,
/// for `i < k`.
pub fn greedy_iteration<T: Scalar>(game: &GameConfig, k: usize, cfg: &DqnConfig, seed: u64) -> Result<GreedyIteration<T>> {
    greedy_iteration_with(game, k, cfg, seed, |_, _, _| Ok(()))
}

/// As [`greedy_iteration`], calling `on_stage(i, &Q_i, &report_i)` as soon as
/// each network is trained.
pub fn greedy_iteration_with<T, F>(game: &GameConfig, k: usize, cfg: &DqnConfig, seed: u64, mut on_stage: F) -> Result<GreedyIteration<T>>
where
    T: Scalar,
    F: FnMut(usize, &Mlp<T>, &TrainReport) -> Result<()>,
{
    if k == 0 {
        return Err(GragError::InvalidConfig("greedy iteration needs k >= 1".into()));
    }
    let mut out = GreedyIteration { networks: Vec::with_capacity(k + 1), reports: Vec::with_capacity(k + 1) };
    for stage in 0..=k {
        let opponent = match out.networks.last() {
            None => PolicyHandle::Random,
            Some(prev) => PolicyHandle::greedy(prev.clone()),
        };
        let (net, report) = train_dqn(cfg, game, &opponent, stage_seed(seed, stage))?;
        on_stage(stage, &net, &report)?;
        out.networks.push(net);
        out.reports.push(report);
    }
    Ok(out)
}
