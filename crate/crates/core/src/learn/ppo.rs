//! Clipped-surrogate PPO with a masked softmax policy head and a separate
//! value network.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{step, GameConfig, Seat};
use crate::error::{GragError, Result};
use crate::learn::dqn::{actor_stream, first_live_state, head_size, init_stream, learner_stream, DEFAULT_ACTION_CAP, EVAL_SALT};
use crate::learn::mlp::{Activation, Mlp};
use crate::learn::optim::{clip_grad_norm, Optimizer, OptimizerKind};
use crate::learn::report::{EvalPoint, LossPoint, TrainReport};
use crate::learn::{layer_sizes, normalize_state};
use crate::oracle::evaluate_matchup;
use crate::policies::{sample_index, Observation, PolicyHandle};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    /// Environment steps gathered per batch; episodes are never split except
    /// by the end of the budget.
    pub rollout_steps: usize,
    /// 0 uses the whole batch.
    pub minibatch_size: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub grad_clip: Option<f64>,
    pub total_steps: usize,
    pub learner: Seat,
    pub eval_episodes: usize,
    pub eval_interval: usize,
    pub action_cap: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            epochs: 4,
            rollout_steps: 2048,
            minibatch_size: 256,
            policy_lr: 3e-4,
            value_lr: 1e-3,
            entropy_coef: 0.01,
            normalize_advantages: true,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            optimizer: OptimizerKind::default(),
            grad_clip: Some(0.5),
            total_steps: 200_000,
            learner: Seat::P1,
            eval_episodes: 2_000,
            eval_interval: 0,
            action_cap: DEFAULT_ACTION_CAP,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GragError::InvalidConfig(msg.into()));
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if !(self.clip > 0.0) {
            return bad("clip ratio must be positive");
        }
        if self.epochs == 0 || self.rollout_steps == 0 {
            return bad("epochs and rollout_steps must be positive");
        }
        if !(self.policy_lr > 0.0) || !(self.value_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.entropy_coef < 0.0 {
            return bad("entropy_coef must be non-negative");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }
}

/// Softmax over the `valid` logits; every other entry is exactly zero.
pub fn masked_policy_distribution<T: Scalar>(logits: &[T], valid: &[usize]) -> Vec<T> {
    assert!(!valid.is_empty(), "no valid action");
    let max = valid.iter().map(|&i| logits[i]).fold(T::neg_infinity(), T::max);
    let mut probs = vec![T::zero(); logits.len()];
    let mut total = T::zero();
    for &i in valid {
        let e = (logits[i] - max).exp();
        probs[i] = e;
        total += e;
    }
    for &i in valid {
        probs[i] /= total;
    }
    probs
}

/// Advantages and returns by the GAE recursion. `last_value` bootstraps a
/// sequence whose final step is not terminal.
pub fn gae_advantages<T: Scalar>(
    rewards: &[T],
    values: &[T],
    terminals: &[bool],
    last_value: T,
    gamma: T,
    lambda: T,
) -> (Vec<T>, Vec<T>) {
    let n = rewards.len();
    assert!(values.len() == n && terminals.len() == n, "misaligned trajectory");
    let mut adv = vec![T::zero(); n];
    let mut next_adv = T::zero();
    for t in (0..n).rev() {
        let live = if terminals[t] { T::zero() } else { T::one() };
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
    }
    let returns = adv.iter().zip(values).map(|(&a, &v)| a + v).collect();
    (adv, returns)
}

/// `min(r A, clip(r, 1-e, 1+e) A)`, and whether the unclipped branch is the
/// one selected (only then does the ratio receive gradient).
pub fn clipped_surrogate<T: Scalar>(ratio: T, advantage: T, clip: T) -> (T, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.max(T::one() - clip).min(T::one() + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoSample<T> {
    pub state: Vec<T>,
    pub valid: Vec<usize>,
    pub action: usize,
    pub log_prob: T,
    pub value: T,
    pub reward: T,
    pub terminal: bool,
}

/// One on-policy batch with its advantages and returns filled in.
#[derive(Clone, Debug, Default)]
pub struct RolloutBatch<T> {
    pub samples: Vec<PpoSample<T>>,
    pub advantages: Vec<T>,
    pub returns: Vec<T>,
}

impl<T: Scalar> RolloutBatch<T> {
    pub fn finish(samples: Vec<PpoSample<T>>, last_value: T, gamma: f64, lambda: f64) -> Self {
        let rewards: Vec<T> = samples.iter().map(|s| s.reward).collect();
        let values: Vec<T> = samples.iter().map(|s| s.value).collect();
        let terminals: Vec<bool> = samples.iter().map(|s| s.terminal).collect();
        let (advantages, returns) = gae_advantages(&rewards, &values, &terminals, last_value, T::lit(gamma), T::lit(lambda));
        Self { samples, advantages, returns }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoDiagnostics {
    pub policy_objective: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Gradient of `-(surrogate + c * entropy) / batch` with respect to the logits.
fn policy_logit_gradient<T: Scalar>(
    probs: &[T],
    valid: &[usize],
    action: usize,
    ratio: T,
    advantage: T,
    active: bool,
    entropy: T,
    entropy_coef: T,
    scale: T,
) -> Vec<T> {
    let mut d = vec![T::zero(); probs.len()];
    for &i in valid {
        let p = probs[i];
        let mut g = T::zero();
        if active {
            let indicator = if i == action { T::one() } else { T::zero() };
            g += ratio * advantage * (indicator - p);
        }
        if p > T::zero() {
            g += entropy_coef * (-p * (p.ln() + entropy));
        }
        d[i] = -scale * g;
    }
    d
}

/// Several epochs of minibatch ascent on the clipped objective plus value
/// regression on the same fresh batch.
pub fn ppo_update<T: Scalar, R: Rng + ?Sized>(
    policy: &mut Mlp<T>,
    value: &mut Mlp<T>,
    policy_opt: &mut Optimizer<T>,
    value_opt: &mut Optimizer<T>,
    batch: &RolloutBatch<T>,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoDiagnostics> {
    if batch.is_empty() {
        return Err(GragError::InvalidConfig("empty rollout batch".into()));
    }
    let mut adv = batch.advantages.clone();
    if cfg.normalize_advantages && adv.len() > 1 {
        let n = T::lit(adv.len() as f64);
        let mean = adv.iter().fold(T::zero(), |a, &b| a + b) / n;
        let var = adv.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
        let sd = var.sqrt() + T::lit(1e-8);
        for a in adv.iter_mut() {
            *a = (*a - mean) / sd;
        }
    }
    let clip = T::lit(cfg.clip);
    let c_ent = T::lit(cfg.entropy_coef);
    let mb = if cfg.minibatch_size == 0 { batch.len() } else { cfg.minibatch_size.min(batch.len()) };
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut diag = PpoDiagnostics::default();
    let mut seen = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let scale = T::one() / T::lit(chunk.len() as f64);
            let mut pg = vec![T::zero(); policy.param_count()];
            let mut vg = vec![T::zero(); value.param_count()];
            for &k in chunk {
                let s = &batch.samples[k];
                let cache = policy.forward_cached(&s.state)?;
                let probs = masked_policy_distribution(cache.output(), &s.valid);
                let entropy = s.valid.iter().fold(T::zero(), |h, &i| {
                    let p = probs[i];
                    if p > T::zero() {
                        h - p * p.ln()
                    } else {
                        h
                    }
                });
                let ratio = (probs[s.action].ln() - s.log_prob).exp();
                let (obj, active) = clipped_surrogate(ratio, adv[k], clip);
                if !obj.is_finite() {
                    return Err(GragError::NumericalFault("non-finite surrogate objective".into()));
                }
                let d = policy_logit_gradient(&probs, &s.valid, s.action, ratio, adv[k], active, entropy, c_ent, scale);
                policy.backward(&cache, &d, &mut pg);

                let vcache = value.forward_cached(&s.state)?;
                let err = vcache.output()[0] - batch.returns[k];
                value.backward(&vcache, &[err * scale], &mut vg);

                diag.policy_objective += obj.to_f64_lossy();
                diag.value_loss += 0.5 * (err * err).to_f64_lossy();
                diag.entropy += entropy.to_f64_lossy();
                diag.clip_fraction += if active { 0.0 } else { 1.0 };
                seen += 1;
            }
            if let Some(max) = cfg.grad_clip {
                clip_grad_norm(&mut pg, max);
                clip_grad_norm(&mut vg, max);
            }
            policy_opt.step(policy.params_mut(), &pg);
            value_opt.step(value.params_mut(), &vg);
        }
    }
    let n = seen as f64;
    diag.policy_objective /= n;
    diag.value_loss /= n;
    diag.entropy /= n;
    diag.clip_fraction /= n;
    if !diag.value_loss.is_finite() || !diag.policy_objective.is_finite() {
        return Err(GragError::NumericalFault("non-finite PPO objective".into()));
    }
    Ok(diag)
}

/// Fresh policy and value networks for the learner seat. The policy head is
/// scaled down so the initial distribution is close to uniform.
pub fn init_ppo_networks<T: Scalar>(cfg: &PpoConfig, game: &GameConfig, seed: u64) -> Result<(Mlp<T>, Mlp<T>)> {
    let out = head_size(game, cfg.action_cap)?;
    let mut rng = stream_rng(seed, init_stream(cfg.learner));
    let mut policy = Mlp::new(&layer_sizes(game.n(), &cfg.hidden, out), cfg.activation, &mut rng)?;
    let last = policy.shapes().len() - 1;
    policy.scale_layer(last, T::lit(0.01));
    let value = Mlp::new(&layer_sizes(game.n(), &cfg.hidden, 1), cfg.activation, &mut rng)?;
    Ok((policy, value))
}

pub fn ppo_config_hash(cfg: &PpoConfig, game: &GameConfig, opponent: &str, seed: u64) -> String {
    crate::provenance::config_hash(&("ppo", cfg, game, opponent, seed))
}

/// Trains `cfg.learner` with PPO against a fixed opponent.
pub fn train_ppo<T: Scalar>(
    cfg: &PpoConfig,
    game: &GameConfig,
    opponent: &PolicyHandle<T>,
    seed: u64,
) -> Result<(Mlp<T>, Mlp<T>, TrainReport)> {
    cfg.validate()?;
    game.validate()?;
    let started = Instant::now();
    let me = cfg.learner;
    let hash = ppo_config_hash(cfg, game, &opponent.fingerprint(), seed);
    let mut report = TrainReport::new("ppo", hash, seed, vec![me]);
    let (mut policy, mut value) = init_ppo_networks::<T>(cfg, game, seed)?;
    let mut policy_opt = Optimizer::new(cfg.optimizer, cfg.policy_lr, policy.param_count());
    let mut value_opt = Optimizer::new(cfg.optimizer, cfg.value_lr, value.param_count());
    let mut env_rng = stream_rng(seed, stream::ENV);
    let mut my_rng = stream_rng(seed, actor_stream(me));
    let mut their_rng = stream_rng(seed, actor_stream(me.other()));
    let mut learn_rng = stream_rng(seed, learner_stream(me));
    let mut evals = 0u64;
    let mut next_eval = cfg.eval_interval;

    let mut st = if cfg.total_steps > 0 { Some(first_live_state(game, &mut env_rng, &mut report.episodes)?) } else { None };
    while report.env_steps < cfg.total_steps {
        let mut samples = Vec::with_capacity(cfg.rollout_steps + game.max_steps);
        let mut last_value = T::zero();
        loop {
            let cur = st.take().expect("live state");
            let mine = Observation::new(game, &cur, me)?;
            let theirs = Observation::new(game, &cur, me.other())?;
            let x = mine.features::<T>();
            let valid = mine.mask().indices();
            let probs = masked_policy_distribution(&policy.forward(&x)?, &valid);
            let idx = sample_index(&probs, &valid, &mut my_rng);
            let v = value.forward(&x)?[0];
            let a_me = mine.decode(idx)?;
            let a_them = opponent.act(&theirs, &mut their_rng)?;
            let (a1, a2) = if me == Seat::P1 { (&a_me, &a_them) } else { (&a_them, &a_me) };
            let (next, record) = step(&cur, a1, a2, game)?;
            report.env_steps += 1;
            let terminal = next.is_terminal();
            samples.push(PpoSample {
                state: x,
                valid,
                action: idx,
                log_prob: probs[idx].ln(),
                value: v,
                reward: T::lit(f64::from(me.signed(record.r1))),
                terminal,
            });
            if terminal {
                report.episodes += 1;
                if report.env_steps < cfg.total_steps {
                    st = Some(first_live_state(game, &mut env_rng, &mut report.episodes)?);
                }
                if samples.len() >= cfg.rollout_steps || report.env_steps >= cfg.total_steps {
                    break;
                }
            } else if report.env_steps >= cfg.total_steps {
                last_value = value.forward(&normalize_state(&next.perspective(me), game.max_budget()))?[0];
                break;
            } else {
                st = Some(next);
            }
        }
        let batch = RolloutBatch::finish(samples, last_value, cfg.gamma, cfg.gae_lambda);
        let diag = ppo_update(&mut policy, &mut value, &mut policy_opt, &mut value_opt, &batch, cfg, &mut learn_rng)?;
        report.updates += 1;
        report.losses.push(LossPoint { env_steps: report.env_steps, seat: me, loss: diag.value_loss });
        if cfg.eval_interval > 0 && report.env_steps >= next_eval && report.env_steps < cfg.total_steps && cfg.eval_episodes > 0 {
            let stats = eval_ppo(&policy, opponent, me, game, cfg.eval_episodes, derive_seed(seed ^ EVAL_SALT, evals))?;
            report.evaluations.push(EvalPoint { env_steps: report.env_steps, stats });
            evals += 1;
            next_eval += cfg.eval_interval;
        }
    }
    if cfg.eval_episodes > 0 {
        let stats = eval_ppo(&policy, opponent, me, game, cfg.eval_episodes, derive_seed(seed ^ EVAL_SALT, evals))?;
        report.evaluations.push(EvalPoint { env_steps: report.env_steps, stats });
    }
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok((policy, value, report))
}

fn eval_ppo<T: Scalar>(
    policy: &Mlp<T>,
    opponent: &PolicyHandle<T>,
    me: Seat,
    game: &GameConfig,
    episodes: usize,
    seed: u64,
) -> Result<crate::oracle::MatchupStats> {
    let mine = PolicyHandle::ppo(policy.clone());
    match me {
        Seat::P1 => evaluate_matchup(&mine, opponent, game, episodes, seed),
        Seat::P2 => evaluate_matchup(opponent, &mine, game, episodes, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_softmax_examples() {
        let p = masked_policy_distribution(&[0.3, 0.3, 0.3, 0.3], &[0, 2]);
        assert_eq!(p, vec![0.5, 0.0, 0.5, 0.0]);
        let p = masked_policy_distribution(&[5.0, -1.0, 2.0], &[1]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let p = masked_policy_distribution(&[0.0, 2f64.ln()], &[0, 1]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gae_examples() {
        let (adv, ret) = gae_advantages::<f64>(&[0.0, 0.0, 1.0], &[0.0; 3], &[false, false, true], 0.0, 0.9, 0.95);
        let expected = [0.731025, 0.855, 1.0];
        for (a, e) in adv.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{adv:?}");
        }
        assert_eq!(adv, ret);

        let r = [0.5, -1.0, 2.0];
        let v = [0.1, 0.4, -0.3];
        let term = [false, false, true];
        let (adv0, _) = gae_advantages::<f64>(&r, &v, &term, 0.0, 0.9, 0.0);
        let deltas = [0.5 + 0.9 * 0.4 - 0.1, -1.0 + 0.9 * -0.3 - 0.4, 2.0 + 0.3];
        for (a, d) in adv0.iter().zip(deltas) {
            assert!((a - d).abs() < 1e-12);
        }
        let (adv1, _) = gae_advantages(&r, &[0.0; 3], &term, 0.0, 1.0, 1.0);
        assert_eq!(adv1, vec![1.5, 1.0, 2.0]);
    }

    #[test]
    fn gae_stops_at_episode_boundaries() {
        let (adv, _) = gae_advantages(&[1.0, 5.0], &[0.0, 0.0], &[true, true], 0.0, 1.0, 1.0);
        assert_eq!(adv, vec![1.0, 5.0]);
    }

    #[test]
    fn surrogate_clipping() {
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), (0.7, true));
        let (obj, active) = clipped_surrogate::<f64>(1.5, 2.0, 0.2);
        assert!((obj - 2.4).abs() < 1e-12 && !active);
        // negative advantage: the larger ratio is the pessimistic branch
        assert_eq!(clipped_surrogate(1.5, -1.0, 0.2), (-1.5, true));
        let (obj, active) = clipped_surrogate::<f64>(0.5, -1.0, 0.2);
        assert!((obj + 0.8).abs() < 1e-12 && !active);
    }

    #[test]
    fn logit_gradient_matches_finite_difference() {
        let logits: [f64; 4] = [0.2, -0.4, 1.1, 0.0];
        let valid = [0, 1, 2];
        let (a, old_lp, adv, c) = (2usize, -1.3, 0.8, 0.05);
        let objective = |z: &[f64]| {
            let p = masked_policy_distribution(z, &valid);
            let h: f64 = valid.iter().map(|&i| -p[i] * p[i].ln()).sum();
            let ratio = (p[a].ln() - old_lp).exp();
            -(clipped_surrogate(ratio, adv, 10.0).0 + c * h)
        };
        let p: Vec<f64> = masked_policy_distribution(&logits, &valid);
        let h: f64 = valid.iter().map(|&i| -p[i] * p[i].ln()).sum();
        let ratio = (p[a].ln() - old_lp).exp();
        let g = policy_logit_gradient(&p, &valid, a, ratio, adv, true, h, c, 1.0);
        for i in 0..4 {
            let mut up = logits;
            up[i] += 1e-6;
            let mut dn = logits;
            dn[i] -= 1e-6;
            let fd = (objective(&up) - objective(&dn)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6, "logit {i}: {fd} vs {}", g[i]);
        }
        assert_eq!(g[3], 0.0);
    }

    #[test]
    fn zero_advantage_leaves_only_entropy() {
        let p = masked_policy_distribution(&[0.0, 0.0], &[0, 1]);
        let g = policy_logit_gradient(&p, &[0, 1], 0, 1.0, 0.0, true, 2f64.ln(), 0.0, 1.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }
}
